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

#pragma once

#include <cstdint>
#include <optional>

#include "devbound/geometry.hpp"
#include "devbound/stats.hpp"

namespace devbound {

inline constexpr std::size_t kDefaultGaussianSamples = 10000;

/// Rows k in [first, first + count) of the standard Gaussian stream for
/// `seed`. Row k depends only on (seed, k, n), so every set of the same
/// dimension estimated with the same seed sees the same draws.
Mat gaussian_draws(Eigen::Index n, std::size_t first, std::size_t count,
                   std::uint64_t seed);

/// Per-draw statistic sup_{x in T} <g_k, x> (or |<g_k, x>|), k < n_samples.
Vec width_statistics(const GeoSet& set, std::size_t n_samples,
                     std::uint64_t seed, bool absolute, bool* exact = nullptr,
                     int threads = 1);

/// Monte Carlo w(T) = E sup <g, x>.
EstimateCI gaussian_width_mc(const GeoSet& set, std::size_t n_samples,
                             std::uint64_t seed, int threads = 1);
/// Monte Carlo gamma(T) = E sup |<g, x>|.
EstimateCI gaussian_complexity_mc(const GeoSet& set, std::size_t n_samples,
                                  std::uint64_t seed, int threads = 1);

/// E ||g|| for g ~ N(0, I_d): sqrt(2) Gamma((d+1)/2) / Gamma(d/2).
double expected_gaussian_norm(Eigen::Index d);

/// Exact w(T) for balls, spheres, subspace balls, singletons and their
/// scalings; std::nullopt otherwise.
std::optional<double> width_closed_form(const GeoSet& set);
/// Exact gamma(T) for the same kinds (symmetric kinds equal the width, a
/// singleton {y} gives ||y|| sqrt(2/pi)).
std::optional<double> complexity_closed_form(const GeoSet& set);

struct SandwichReport {
  EstimateCI width;
  EstimateCI complexity;
  double y_norm = 0.0;
  double lo_bound = 0.0;  // (w + |y|) / 3
  double hi_bound = 0.0;  // 2 (w + |y|)
  bool pass = false;
};

/// Checks (1/3)[w(T) + |y|] <= gamma(T) <= 2[w(T) + |y|] with each side
/// widened by its 95% interval. Throws if y is not in T.
SandwichReport sandwich_check(const GeoSet& set, const Vec& y,
                              std::size_t n_samples, std::uint64_t seed,
                              int threads = 1);

}  // namespace devbound
