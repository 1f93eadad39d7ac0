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
#include <vector>

#include "devbound/ensembles.hpp"
#include "devbound/geometry.hpp"
#include "devbound/stats.hpp"

namespace devbound {

// ---------------------------------------------------------------------------
// Singular values of tall matrices

struct SingularTrial {
  std::uint64_t draw_index = 0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  bool violated = false;
};

struct SingularReport {
  std::vector<SingularTrial> trials;
  double lo = 0.0;  // sqrt(m) - C K^2 sqrt(n)
  double hi = 0.0;  // sqrt(m) + C K^2 sqrt(n)
  double k2 = 0.0;
  double c_cal = 0.0;
  std::size_t violations = 0;
};

/// All singular values of draws [first_draw, first_draw + trials) inside
/// [sqrt(m) - C K^2 sqrt(n), sqrt(m) + C K^2 sqrt(n)]. Needs m > n.
SingularReport singular_interval_check(const EnsembleSpec& spec,
                                       std::size_t trials, double c_cal,
                                       std::size_t first_draw = 0,
                                       int threads = 1);

/// Full list of singular values, descending.
Vec singular_values(const Mat& a);

// ---------------------------------------------------------------------------
// Johnson-Lindenstrauss

struct JlReport {
  std::vector<double> distortion;  // pairs (i, j), i < j, row-major
  double max_distortion = 0.0;
  double bound = 0.0;  // C K^2 sqrt(log |X|) / sqrt(m)
  std::uint64_t draw_index = 0;
};

/// Relative pair distortions |‖A(x - y)‖ / (sqrt(m) ‖x - y‖) - 1| of a cloud
/// with distinct points.
JlReport jl_embed(const GeoSet& cloud, const MatrixSample& a, double c_cal);

/// gamma(star(X - X) cap ‖x_i - x_j‖ B) / sqrt(m).
EstimateCI jl_local_bound(const GeoSet& cloud, Eigen::Index i, Eigen::Index j,
                          Eigen::Index m, std::size_t n_samples,
                          std::uint64_t seed, int threads = 1);

/// gamma(X - X) / sqrt(m).
EstimateCI jl_global_bound(const GeoSet& cloud, Eigen::Index m,
                           std::size_t n_samples, std::uint64_t seed,
                           int threads = 1);

// ---------------------------------------------------------------------------
// Escape through a mesh

struct EscapeReport {
  std::vector<double> min_norm;  // min over T of ‖A x‖, per trial
  std::vector<bool> escaped;     // min_norm > 1e-8 sqrt(m)
  Proportion frequency;
  double gamma_hat = 0.0;
  double m_required = 0.0;  // C K^4 gamma^2
};

/// Exact min of ‖A x‖ over a unit-sphere cloud or a sparse unit sphere.
double min_image_norm(const Mat& a, const GeoSet& set);

EscapeReport escape_check(const EnsembleSpec& spec, const GeoSet& set,
                          std::size_t trials, double c_cal, double gamma_hat,
                          std::size_t first_draw = 0, int threads = 1);

struct CurvePoint {
  Eigen::Index m = 0;
  Proportion rate;
  double smoothed = 0.0;  // isotonic fit
};

struct MonotoneCurve {
  std::vector<CurvePoint> points;
  /// Largest |rate - smoothed| relative to the Wilson interval width; at
  /// most 1 means the curve is nondecreasing within its CIs.
  double isotonic_excess = 0.0;
  bool monotone = false;
  /// First m where the smoothed curve reaches 1/2 (linear interpolation);
  /// NaN when it never does.
  double m50 = 0.0;
};

/// Builds a curve from per-m success counts with isotonic smoothing.
MonotoneCurve make_monotone_curve(const std::vector<Eigen::Index>& m_grid,
                                  const std::vector<std::size_t>& successes,
                                  std::size_t trials);

/// Escape frequency of the sparse unit sphere (s, n) over m_grid.
MonotoneCurve escape_curve(Family family, Eigen::Index n, Eigen::Index s,
                           const std::vector<Eigen::Index>& m_grid,
                           std::size_t trials, std::uint64_t seed,
                           int threads = 1);

// ---------------------------------------------------------------------------
// M* estimate and random images

struct MstarReport {
  std::vector<double> radius_lb;  // per trial
  double bound = 0.0;             // C K^2 gamma / sqrt(m)
  std::size_t violations = 0;     // radius_lb > bound
};

/// Lower bound on rad(ker A cap T): alternating projections from random
/// kernel starts, then a radial push to the boundary of T along the kernel.
double mstar_radius_lb(const Mat& a, const GeoSet& set, int n_starts,
                       std::uint64_t seed, int iterations = 200);

MstarReport mstar_check(const EnsembleSpec& spec, const GeoSet& set,
                        std::size_t trials, int n_starts, double c_cal,
                        double gamma_hat, std::size_t first_draw = 0,
                        int threads = 1);

struct ImageReport {
  double rad_image = 0.0;  // max ‖A x‖ over the cloud
  double bound = 0.0;      // sqrt(m) rad(T) + C K^2 gamma
  bool holds = false;
};

ImageReport random_image_radius(const MatrixSample& a, const GeoSet& cloud,
                                double c_cal, double gamma_hat);

// ---------------------------------------------------------------------------
// Constrained least squares

struct SolverOptions {
  int max_iter = 2000;
  double tolerance = 1e-9;  // relative objective decrease
  /// Step size; 0 means 1 / sigma_max(A)^2.
  double step = 0.0;
};

struct RecoveryResult {
  Vec x_hat;
  Vec h;  // x_hat - x*
  Vec v;  // h / (1 + lambda)
  double delta = 0.0;  // ‖v‖
  double objective = 0.0;  // 0.5 ‖A x_hat - y‖^2
  int iterations = 0;
  bool converged = false;
  bool nonconvex = false;     // iterative hard thresholding
  bool in_set = false;        // x_hat in lambda T
  bool surrogate_ok = false;  // ‖A h‖^2 <= 2 <h, A^T z> + tol
};

/// Projected gradient descent on 0.5 ‖A x - y‖^2 over lambda T from x = 0.
/// With a sparse set this is iterative hard thresholding.
RecoveryResult constrained_least_squares(const Mat& a, const Vec& y,
                                         const GeoSet& set, double lambda,
                                         const Vec& truth,
                                         const SolverOptions& opts = {});

/// Random s-sparse vector with Gaussian entries on a uniform support.
Vec sparse_signal(Eigen::Index n, Eigen::Index s, std::uint64_t seed,
                  std::uint64_t index);

struct PhaseOptions {
  Family family = Family::Gaussian;
  Eigen::Index n = 64;
  Eigen::Index s = 2;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  int threads = 1;
  SolverOptions solver;
};

/// Success means ‖x_hat - x*‖ <= 1e-4 ‖x*‖.
bool exact_recovery(const RecoveryResult& r, const Vec& truth);

/// Noiseless l1 recovery rate at each m with T = L1Ball(‖x*‖_1).
MonotoneCurve phase_transition(const PhaseOptions& opts,
                               const std::vector<Eigen::Index>& m_grid);

// ---------------------------------------------------------------------------
// Model selection over scalings

struct SelectionRow {
  std::size_t trial = 0;
  std::uint64_t draw_index = 0;
  double lambda = 1.0;
  double delta = 0.0;
  double gamma_local = 0.0;  // gamma(T cap delta B)
  double term1 = 0.0;        // K^2 gamma / sqrt(m)
  double term2 = 0.0;        // K sqrt(gamma ‖z‖ / (m (1 + lambda)))
  double ratio = 0.0;        // delta / (term1 + w term2)
  double z_norm = 0.0;
  bool converged = false;
  bool satisfied = false;
};

struct SelectionOptions {
  std::vector<double> lambda_grid{1.0, 2.0, 4.0, 8.0};
  double sigma = 0.1;
  // Weight of the second term relative to the first (c2 / c1). 1 fits a
  // single constant to both.
  double term2_weight = 1.0;
  Eigen::Index s = 4;  // sparsity of x*, rescaled onto the boundary of T
  std::size_t trials = 200;
  std::size_t first_trial = 0;
  std::size_t n_samples = 2000;
  std::uint64_t gaussian_seed = 0;
  int threads = 1;
  SolverOptions solver{20000, 1e-9, 0.0};
};

struct SelectionReport {
  std::vector<SelectionRow> rows;  // trial-major, lambda-minor
  std::vector<double> uniform_ratio;  // per trial max over lambda (converged)
  std::vector<Proportion> per_lambda;
  Proportion uniform;
  std::size_t excluded = 0;  // non-converged rows
  double c_cal = 0.0;
  bool exact_path = true;
};

/// Per trial: draw A and z, solve over lambda T for every lambda with the
/// shared A, evaluate delta <= C (term1 + term2) at the realized delta.
/// T must be convex and symmetric; x* is drawn from `spec.seed`.
SelectionReport model_selection_sweep(const EnsembleSpec& spec,
                                      const GeoSet& set, double c_cal,
                                      const SelectionOptions& opts);

struct SubspaceRow {
  std::size_t trial = 0;
  double h2 = 0.0;      // ‖h‖^2
  double z2 = 0.0;      // ‖z‖^2
  double ratio = 0.0;   // ‖h‖^2 m^2 / (K^4 d ‖z‖^2)
  bool satisfied = false;
};

struct SubspaceReport {
  std::vector<SubspaceRow> rows;
  Proportion satisfied;
  double c_cal = 0.0;
};

/// Least squares on the span of a Subspace set (radius dropped) with noise
/// sigma, checking ‖h‖^2 <= C K^4 d ‖z‖^2 / m^2.
SubspaceReport subspace_selection(const EnsembleSpec& spec, const GeoSet& set,
                                  double sigma, double c_cal,
                                  std::size_t trials, std::size_t first_trial,
                                  int threads = 1);

}  // namespace devbound
