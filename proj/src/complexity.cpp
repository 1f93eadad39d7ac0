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

#include "devbound/complexity.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "devbound/parallel.hpp"
#include "devbound/rng.hpp"

namespace devbound {

namespace {
constexpr std::size_t kChunk = 512;
}

Mat gaussian_draws(Eigen::Index n, std::size_t first, std::size_t count,
                   std::uint64_t seed) {
  Mat g(static_cast<Eigen::Index>(count), n);
  for (std::size_t k = 0; k < count; ++k) {
    Rng rng(derive_stream(seed, "gaussian", first + k));
    for (Eigen::Index j = 0; j < n; ++j) {
      g(static_cast<Eigen::Index>(k), j) = rng.normal();
    }
  }
  return g;
}

Vec width_statistics(const GeoSet& set, std::size_t n_samples,
                     std::uint64_t seed, bool absolute, bool* exact,
                     int threads) {
  Vec out(static_cast<Eigen::Index>(n_samples));
  const std::size_t chunks = (n_samples + kChunk - 1) / kChunk;
  std::vector<char> chunk_exact(chunks, 1);
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t first = c * kChunk;
    const std::size_t count = std::min(kChunk, n_samples - first);
    const Mat g = gaussian_draws(set.dim(), first, count, seed);
    bool ok = true;
    const Vec values = absolute ? abs_support_batch(set, g, &ok)
                                : support_batch(set, g, &ok);
    out.segment(static_cast<Eigen::Index>(first),
                static_cast<Eigen::Index>(count)) = values;
    chunk_exact[c] = ok ? 1 : 0;
  });
  if (exact) {
    for (char e : chunk_exact) *exact = *exact && e != 0;
  }
  return out;
}

namespace {

EstimateCI estimate_statistic(const GeoSet& set, std::size_t n_samples,
                              std::uint64_t seed, bool absolute, int threads) {
  if (n_samples < 2) throw std::invalid_argument("n_samples must be >= 2");
  bool exact = true;
  const Vec values =
      width_statistics(set, n_samples, seed, absolute, &exact, threads);
  return estimate_from(std::span<const double>(values.data(), values.size()),
                       exact);
}

}  // namespace

EstimateCI gaussian_width_mc(const GeoSet& set, std::size_t n_samples,
                             std::uint64_t seed, int threads) {
  return estimate_statistic(set, n_samples, seed, false, threads);
}

EstimateCI gaussian_complexity_mc(const GeoSet& set, std::size_t n_samples,
                                  std::uint64_t seed, int threads) {
  return estimate_statistic(set, n_samples, seed, true, threads);
}

double expected_gaussian_norm(Eigen::Index d) {
  if (d <= 0) throw std::invalid_argument("dimension must be positive");
  const double dd = static_cast<double>(d);
  return std::sqrt(2.0) *
         std::exp(std::lgamma(0.5 * (dd + 1.0)) - std::lgamma(0.5 * dd));
}

std::optional<double> width_closed_form(const GeoSet& set) {
  switch (set.kind()) {
    case SetKind::Ball2:
    case SetKind::Sphere:
      return set.r() * expected_gaussian_norm(set.dim());
    case SetKind::Subspace:
      if (!std::isfinite(set.r())) return std::nullopt;
      return set.r() * expected_gaussian_norm(set.basis().cols());
    case SetKind::FiniteCloud:
      if (set.points().rows() == 1) return 0.0;
      return std::nullopt;
    case SetKind::Scaled:
      if (auto inner = width_closed_form(set.inner())) {
        return set.lambda() * *inner;
      }
      return std::nullopt;
    default:
      return std::nullopt;
  }
}

std::optional<double> complexity_closed_form(const GeoSet& set) {
  switch (set.kind()) {
    case SetKind::FiniteCloud:
      if (set.points().rows() == 1) {
        return set.point_norms()[0] * std::sqrt(2.0 / std::numbers::pi);
      }
      return std::nullopt;
    case SetKind::Scaled:
      if (auto inner = complexity_closed_form(set.inner())) {
        return set.lambda() * *inner;
      }
      return std::nullopt;
    default:
      return width_closed_form(set);
  }
}

SandwichReport sandwich_check(const GeoSet& set, const Vec& y,
                              std::size_t n_samples, std::uint64_t seed,
                              int threads) {
  if (!contains(set, y)) {
    throw std::invalid_argument("sandwich_check: y is not in T");
  }
  SandwichReport rep;
  rep.width = gaussian_width_mc(set, n_samples, seed, threads);
  rep.complexity = gaussian_complexity_mc(set, n_samples, seed, threads);
  rep.y_norm = y.norm();
  rep.lo_bound = (rep.width.mean + rep.y_norm) / 3.0;
  rep.hi_bound = 2.0 * (rep.width.mean + rep.y_norm);
  const double slack = 1e-12 * std::max(1.0, rep.hi_bound);
  const bool lower_ok =
      (rep.width.ci_lo + rep.y_norm) / 3.0 <= rep.complexity.ci_hi + slack;
  const bool upper_ok =
      rep.complexity.ci_lo <= 2.0 * (rep.width.ci_hi + rep.y_norm) + slack;
  rep.pass = lower_ok && upper_ok;
  return rep;
}

}  // namespace devbound
