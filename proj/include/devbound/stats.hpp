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

#include <cstddef>
#include <span>
#include <vector>

namespace devbound {

/// Monte Carlo scalar estimate with a CLT interval.
struct EstimateCI {
  double mean = 0.0;
  double std_error = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::size_t n_samples = 0;
  bool exact = true;  // false when the underlying oracle is a lower bound
};

inline constexpr double kZ95 = 1.96;

/// Builds an estimate from per-draw statistics. Requires at least 2 values.
EstimateCI estimate_from(std::span<const double> values, bool exact = true);

/// Binomial proportion with a Wilson score interval.
struct Proportion {
  std::size_t successes = 0;
  std::size_t total = 0;
  double p = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

Proportion wilson(std::size_t successes, std::size_t total, double z = kZ95);

double mean(std::span<const double> values);
double sample_stddev(std::span<const double> values);
double median(std::vector<double> values);
/// Linear-interpolation quantile (Hyndman-Fan type 7), q in [0, 1].
double quantile(std::vector<double> values, double q);
/// Average ranks, ties sharing the mean rank.
std::vector<double> ranks(std::span<const double> values);
double spearman(std::span<const double> x, std::span<const double> y);

/// Weighted least-squares nondecreasing fit (pool adjacent violators).
std::vector<double> isotonic_increasing(std::span<const double> values,
                                        std::span<const double> weights);

}  // namespace devbound
