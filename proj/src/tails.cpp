// Copyright 2026 The devbound Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "devbound/tails.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "devbound/parallel.hpp"

namespace devbound {

double log_orlicz_moment(std::span<const double> samples, int index, double k) {
  if (index != 1 && index != 2) throw std::invalid_argument("index must be 1 or 2");
  // log mean exp(u_i) with u_i = (|x_i|/k)^index.
  double umax = -std::numeric_limits<double>::infinity();
  for (double x : samples) {
    const double t = std::abs(x) / k;
    umax = std::max(umax, index == 2 ? t * t : t);
  }
  double acc = 0.0;
  for (double x : samples) {
    const double t = std::abs(x) / k;
    acc += std::exp((index == 2 ? t * t : t) - umax);
  }
  return umax + std::log(acc / static_cast<double>(samples.size()));
}

OrliczEstimate orlicz_norm_empirical(std::span<const double> samples, int index) {
  if (index != 1 && index != 2) throw std::invalid_argument("index must be 1 or 2");
  if (samples.size() < kMinOrliczSamples) {
    throw std::invalid_argument("orlicz_norm_empirical needs >= 100 samples");
  }
  OrliczEstimate est;
  est.orlicz_index = index;
  est.n_samples = samples.size();
  double peak = 0.0;
  for (double x : samples) {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite sample");
    peak = std::max(peak, std::abs(x));
  }
  if (peak == 0.0) {
    est.degenerate = true;
    return est;
  }
  const double log2 = std::log(2.0);
  // Feasible means E exp(u) <= 2, i.e. E psi <= 1; feasibility is monotone in K.
  const auto feasible = [&](double k) {
    return log_orlicz_moment(samples, index, k) <= log2;
  };
  double lo = peak / 50.0;
  double hi = peak * 50.0;
  est.bracket_lo = lo;
  est.bracket_hi = hi;
  while ((hi - lo) > 1e-4 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  est.norm_value = hi;
  return est;
}

double bernstein_bound(long m, double t, double l, double c_bern) {
  if (!(l > 0.0)) throw std::invalid_argument("L must be positive");
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  if (!(t >= 0.0)) throw std::invalid_argument("t must be >= 0");
  const double s = t / l;
  const double exponent = c_bern * static_cast<double>(m) * std::min(s * s, s);
  return std::min(1.0, 2.0 * std::exp(-exponent));
}

double deviation_process(const Mat& a, const Vec& x,
                         const std::optional<Mat>& sigma_sqrt) {
  const double root_m = std::sqrt(static_cast<double>(a.rows()));
  const double scale = sigma_sqrt ? (*sigma_sqrt * x).norm() : x.norm();
  return (a * x).norm() - root_m * scale;
}

std::vector<double> norm_deviation_samples(const EnsembleSpec& spec,
                                           std::size_t n_trials, int threads) {
  EnsembleSpec column = spec;
  column.n = 1;
  column.covariance.reset();
  validate(column);
  const double root_m = std::sqrt(static_cast<double>(column.m));
  std::vector<double> out(n_trials);
  parallel_for(n_trials, threads, [&](std::size_t t) {
    const MatrixSample a = sample_matrix(column, t);
    out[t] = a.entries.col(0).norm() - root_m;
  });
  return out;
}

OrliczEstimate norm_concentration_check(const EnsembleSpec& spec,
                                        std::size_t n_trials, int threads) {
  const auto samples = norm_deviation_samples(spec, n_trials, threads);
  return orlicz_norm_empirical(samples, 2);
}

std::vector<IncrementResult> increment_sweep(
    const EnsembleSpec& spec, const std::vector<std::pair<Vec, Vec>>& pairs,
    std::size_t n_trials, int threads) {
  validate(spec);
  for (const auto& [x, y] : pairs) {
    if (x.size() != spec.n || y.size() != spec.n) {
      throw std::invalid_argument("increment vectors must have length n");
    }
    if ((x - y).norm() == 0.0) {
      throw std::invalid_argument("increment_ratio needs x != y");
    }
  }
  std::optional<Mat> root;
  if (spec.covariance) root = spd_sqrt(*spec.covariance);
  // diffs(p, t) = Z_x - Z_y for pair p on draw t.
  Mat diffs(static_cast<Eigen::Index>(pairs.size()),
            static_cast<Eigen::Index>(n_trials));
  parallel_for(n_trials, threads, [&](std::size_t t) {
    const MatrixSample a = sample_matrix(spec, t);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto& [x, y] = pairs[p];
      diffs(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(t)) =
          deviation_process(a.entries, x, root) -
          deviation_process(a.entries, y, root);
    }
  });
  std::vector<IncrementResult> out(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const Vec row = diffs.row(static_cast<Eigen::Index>(p)).transpose();
    auto& res = out[p];
    res.estimate = orlicz_norm_empirical(
        std::span<const double>(row.data(), row.size()), 2);
    res.distance = (pairs[p].first - pairs[p].second).norm();
    res.ratio = res.estimate.norm_value / res.distance;
  }
  return out;
}

IncrementResult increment_ratio(const EnsembleSpec& spec, const Vec& x,
                                const Vec& y, std::size_t n_trials,
                                int threads) {
  return increment_sweep(spec, {{x, y}}, n_trials, threads).front();
}

}  // namespace devbound
