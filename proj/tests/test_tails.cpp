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

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "devbound/tails.hpp"
#include "oracles.hpp"

using namespace devbound;

namespace {

std::vector<double> normals(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> out(count);
  for (auto& v : out) v = z(gen);
  return out;
}

EnsembleSpec spec_of(Family f, Eigen::Index m, Eigen::Index n, std::uint64_t seed) {
  return EnsembleSpec{f, m, n, std::nullopt, seed};
}

Vec random_unit(std::mt19937_64& gen, Eigen::Index n) {
  Vec v = oracle::random_vec(gen, n);
  return v / v.norm();
}

}  // namespace

TEST_CASE("constant samples") {
  const std::vector<double> c(200, 1.7);
  const auto e = orlicz_norm_empirical(c, 2);
  CHECK(e.norm_value == doctest::Approx(1.7 / std::sqrt(std::log(2.0))).epsilon(2e-4));
  CHECK(e.orlicz_index == 2);
  CHECK(e.n_samples == 200);
  CHECK(e.bracket_lo <= e.norm_value);
  CHECK(e.norm_value <= e.bracket_hi);
  CHECK(orlicz_norm_empirical(c, 1).norm_value ==
        doctest::Approx(1.7 / std::log(2.0)).epsilon(2e-4));
}

TEST_CASE("normal samples reproduce the Gaussian psi_2 norm") {
  const auto x = normals(100000, 1);
  const auto e = orlicz_norm_empirical(x, 2);
  CHECK(std::abs(e.norm_value / std::sqrt(8.0 / 3.0) - 1.0) < 0.05);
  // The defining moment at the returned norm.
  const double moment = std::exp(log_orlicz_moment(x, 2, e.norm_value)) - 1.0;
  CHECK(moment >= 0.95);
  CHECK(moment <= 1.05);
}

TEST_CASE("degenerate and undersized samples") {
  const std::vector<double> zeros(150, 0.0);
  const auto e = orlicz_norm_empirical(zeros, 2);
  CHECK(e.degenerate);
  CHECK(e.norm_value == 0.0);
  CHECK_THROWS_AS(orlicz_norm_empirical(std::vector<double>(99, 1.0), 2),
                  std::invalid_argument);
  CHECK_THROWS(orlicz_norm_empirical(std::vector<double>(200, 1.0), 3));
}

TEST_CASE("the empirical norm scales exactly with the samples") {
  auto x = normals(5000, 2);
  const double base = orlicz_norm_empirical(x, 2).norm_value;
  for (double c : {0.01, 3.0, 250.0}) {
    std::vector<double> y(x);
    for (auto& v : y) v *= c;
    CHECK(orlicz_norm_empirical(y, 2).norm_value == doctest::Approx(c * base).epsilon(1e-6));
  }
}

TEST_CASE("psi_1 is controlled by psi_2 and the product rule holds") {
  const auto x = normals(100000, 3);
  const auto y = normals(100000, 4);
  const double p2x = orlicz_norm_empirical(x, 2).norm_value;
  CHECK(orlicz_norm_empirical(x, 1).norm_value <= 2.0 * p2x);
  std::vector<double> xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) xy[i] = x[i] * y[i];
  const double p2y = orlicz_norm_empirical(y, 2).norm_value;
  CHECK(orlicz_norm_empirical(xy, 1).norm_value <= 1.2 * p2x * p2y);
}

TEST_CASE("Bernstein bound examples") {
  CHECK(bernstein_bound(10, 0.0, 1.0) == 1.0);
  CHECK(bernstein_bound(100, 2.0, 2.0) == doctest::Approx(2.77758877299280412e-11).epsilon(1e-12));
  const double at = bernstein_bound(40, 1.0, 1.0);
  CHECK(bernstein_bound(40, 1.0 - 1e-9, 1.0) == doctest::Approx(at).epsilon(1e-6));
  CHECK(bernstein_bound(40, 1.0 + 1e-9, 1.0) == doctest::Approx(at).epsilon(1e-6));
  CHECK(bernstein_bound(40, 3.0, 1.0, 0.5) == doctest::Approx(2.0 * std::exp(-0.5 * 40 * 3.0)));
  CHECK_THROWS(bernstein_bound(10, 1.0, 0.0));
  CHECK_THROWS(bernstein_bound(10, -1.0, 1.0));
}

TEST_CASE("norm concentration") {
  const auto r1 = norm_concentration_check(spec_of(Family::Rademacher, 1, 1, 0), 500);
  CHECK(r1.degenerate);
  CHECK(r1.norm_value == 0.0);

  // m = 2: ||X|| is Rayleigh, so E exp((R - sqrt 2)^2 / K^2) has a closed
  // integral. It stays near 1.36 as K decreases to sqrt 2 and diverges below,
  // so the exact norm is sqrt 2 and the far tail that sets it is invisible to
  // any sample. Compare the moment function where the tail is light instead.
  const double s2 = std::sqrt(2.0);
  const auto rayleigh_moment = [&](double k) {
    return oracle::simpson(
        [&](double r) { return r * std::exp(-r * r / 2.0 + (r - s2) * (r - s2) / (k * k)); },
        0.0, 400.0, 400000);
  };
  const auto m2 = EnsembleSpec{Family::Gaussian, 2, 1, std::nullopt, 5};
  const auto z2 = norm_deviation_samples(m2, 100000);
  for (double k : {2.0, 2.5, 3.0}) {
    CAPTURE(k);
    CHECK(std::exp(log_orlicz_moment(z2, 2, k)) ==
          doctest::Approx(rayleigh_moment(k)).epsilon(0.05));
  }
  CHECK(rayleigh_moment(s2 + 1e-6) < 2.0);
  const auto r2 = norm_concentration_check(m2, 100000);
  CHECK(r2.norm_value <= s2);
  CHECK(r2.norm_value >= 0.8 * s2);

  const auto samples = norm_deviation_samples(spec_of(Family::Gaussian, 30, 7, 5), 300);
  CHECK(samples.size() == 300);
  const auto a0 = sample_matrix(spec_of(Family::Gaussian, 30, 1, 5), 4);
  CHECK(samples[4] == doctest::Approx(a0.entries.col(0).norm() - std::sqrt(30.0)));
}

TEST_CASE("increment reductions") {
  std::mt19937_64 gen(7);
  const auto spec = spec_of(Family::Gaussian, 20, 6, 11);
  const Vec x = oracle::random_vec(gen, 6);
  const Vec y = oracle::random_vec(gen, 6);

  // y = 0 is the single-vector statistic.
  std::vector<double> zx(1000);
  for (std::size_t t = 0; t < zx.size(); ++t) {
    zx[t] = deviation_process(sample_matrix(spec, t).entries, x);
  }
  const double single = orlicz_norm_empirical(zx, 2).norm_value / x.norm();
  const auto r0 = increment_ratio(spec, x, Vec::Zero(6), 1000);
  CHECK(r0.ratio == doctest::Approx(single).epsilon(1e-9));
  CHECK(r0.distance == doctest::Approx(x.norm()));

  // Collinear pairs reduce to the same statistic.
  const auto rc = increment_ratio(spec, x, 0.3 * x, 1000);
  CHECK(rc.ratio == doctest::Approx(single).epsilon(1e-6));

  // Swapping the pair changes nothing.
  CHECK(increment_ratio(spec, x, y, 1000).ratio == increment_ratio(spec, y, x, 1000).ratio);
  CHECK_THROWS_AS(increment_ratio(spec, x, x, 1000), std::invalid_argument);

  // Shared draws in a sweep give the same per-pair answers.
  const auto sweep = increment_sweep(spec, {{x, y}, {x, Vec::Zero(6)}}, 1000);
  CHECK(sweep[1].ratio == r0.ratio);
  CHECK(sweep[0].ratio == increment_ratio(spec, x, y, 1000).ratio);
}

TEST_CASE("increment ratios stay bounded over random unit pairs") {
  std::mt19937_64 gen(8);
  const auto spec = spec_of(Family::Gaussian, 50, 20, 13);
  std::vector<std::pair<Vec, Vec>> pairs;
  for (int k = 0; k < 50; ++k) pairs.emplace_back(random_unit(gen, 20), random_unit(gen, 20));
  const auto results = increment_sweep(spec, pairs, 1000, 2);
  double worst = 0.0;
  for (const auto& r : results) worst = std::max(worst, r.ratio);
  const double k = scalar_psi2(Family::Gaussian);
  CHECK(worst / (k * k) <= 10.0);
}

TEST_CASE("deviation process with a covariance") {
  Mat a(2, 2);
  a << 1.0, 0.0, 0.0, 1.0;
  Vec x(2);
  x << 3.0, 4.0;
  CHECK(deviation_process(a, x) == doctest::Approx(5.0 - std::sqrt(2.0) * 5.0));
  Mat root = Mat::Identity(2, 2) * 2.0;
  CHECK(deviation_process(a, x, root) == doctest::Approx(5.0 - std::sqrt(2.0) * 10.0));
}
