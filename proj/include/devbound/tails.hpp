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
#include <span>
#include <vector>

#include "devbound/ensembles.hpp"
#include "devbound/geometry.hpp"

namespace devbound {

/// Empirical Orlicz norm of a sample.
struct OrliczEstimate {
  double norm_value = 0.0;
  int orlicz_index = 2;
  std::size_t n_samples = 0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  bool degenerate = false;  // all samples zero
};

inline constexpr std::size_t kMinOrliczSamples = 100;
inline constexpr double kDefaultBernsteinConstant = 0.25;

/// Smallest K with mean psi(|x_i| / K) <= 1, psi_1(t) = e^t - 1 and
/// psi_2(t) = e^{t^2} - 1. Bisection on [max|x|/50, 50 max|x|] to relative
/// tolerance 1e-4, evaluated in log space. Needs >= 100 samples.
OrliczEstimate orlicz_norm_empirical(std::span<const double> samples, int index);

/// mean over samples of psi_index(|x| / k), computed in log space and
/// returned as log(1 + mean psi).
double log_orlicz_moment(std::span<const double> samples, int index, double k);

/// min(1, 2 exp(-c m min(t^2/L^2, t/L))).
double bernstein_bound(long m, double t, double l,
                       double c_bern = kDefaultBernsteinConstant);

/// Z_x = ||A x|| - sqrt(m) ||sqrt(Sigma) x|| (sqrt(m) ||x|| when isotropic).
double deviation_process(const Mat& a, const Vec& x,
                         const std::optional<Mat>& sigma_sqrt = std::nullopt);

/// Samples of ||X|| - sqrt(m) where X is column 0 of sample_matrix(spec, t)
/// for t < n_trials (spec.n is ignored and treated as 1).
std::vector<double> norm_deviation_samples(const EnsembleSpec& spec,
                                           std::size_t n_trials,
                                           int threads = 1);

/// psi_2 norm of ||X|| - sqrt(m) over n_trials draws.
OrliczEstimate norm_concentration_check(const EnsembleSpec& spec,
                                        std::size_t n_trials, int threads = 1);

struct IncrementResult {
  OrliczEstimate estimate;  // of Z_x - Z_y
  double distance = 0.0;    // ||x - y||
  double ratio = 0.0;       // estimate.norm_value / distance
};

/// Empirical psi_2(Z_x - Z_y) / ||x - y|| over matrices
/// sample_matrix(spec, t), t < n_trials.
IncrementResult increment_ratio(const EnsembleSpec& spec, const Vec& x,
                                 const Vec& y, std::size_t n_trials,
                                 int threads = 1);

/// increment_ratio for many pairs sharing the same matrix draws.
std::vector<IncrementResult> increment_sweep(
    const EnsembleSpec& spec, const std::vector<std::pair<Vec, Vec>>& pairs,
    std::size_t n_trials, int threads = 1);

}  // namespace devbound
