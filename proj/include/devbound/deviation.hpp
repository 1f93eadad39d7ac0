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
#include <string>
#include <vector>

#include "devbound/ensembles.hpp"
#include "devbound/geometry.hpp"
#include "devbound/stats.hpp"

namespace devbound {

/// Uniform deviation of Z_x = ||A x|| - sqrt(m) ||x|| over a set.
struct DeviationReport {
  double sup_abs = 0.0;  // sup |Z_x|
  double sup_pos = 0.0;  // sup Z_x
  double sup_neg = 0.0;  // sup -Z_x
  Vec witness;           // attains sup_abs
  bool exact = true;     // false: heuristic lower bound
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  std::string set;
  std::uint64_t draw_index = 0;
};

struct DeviationOptions {
  bool force_heuristic = false;
  int starts = 16;
  int iterations = 500;
  std::uint64_t seed = 0;
  /// SparseVectors enumerates all supports up to this count, else samples.
  std::size_t max_supports = 100000;
};

/// Exact for clouds, difference clouds, balls, spheres, subspace balls and
/// sparse sets with enumerable supports, and for scalings, star hulls and
/// ball intersections that reduce to those. Other sets use multi-start
/// projected gradient ascent and are flagged inexact. Isotropic specs only,
/// except clouds, which use sqrt(m) ||sqrt(Sigma) x||.
DeviationReport sup_deviation(const MatrixSample& a, const GeoSet& set,
                              const DeviationOptions& opts = {});

/// Number of s-subsets of n items, saturating at max + 1.
std::size_t binomial_capped(std::size_t n, std::size_t s, std::size_t max);

/// Extreme singular values with sigma_min taken over the unit sphere
/// (0 when the matrix has more columns than rows).
struct ExtremeSingular {
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  Vec v_min;
  Vec v_max;
};
ExtremeSingular extreme_singular_values(const Mat& a);

// ---------------------------------------------------------------------------
// Experiments

struct SweepRow {
  std::string set;
  EstimateCI gamma_hat;
  EstimateCI sup;       // over matrix draws
  double k2 = 0.0;      // K^2
  double ratio = 0.0;   // sup.mean / (K^2 gamma_hat.mean)
  bool exact = true;
};

struct SweepOptions {
  std::size_t trials = 200;
  std::size_t first_draw = 0;
  std::size_t n_samples = 10000;
  std::uint64_t gaussian_seed = 0;
  int threads = 1;
  DeviationOptions deviation;
};

/// Per-draw sup reports for draws [first_draw, first_draw + trials) of spec;
/// result[s][t] is set s on draw t.
std::vector<std::vector<DeviationReport>> deviation_table(
    const EnsembleSpec& spec, const std::vector<GeoSet>& sets,
    const SweepOptions& opts);

/// Mean sup deviation against K^2 gamma(T) for each set, sharing draws.
std::vector<SweepRow> expectation_sweep(const EnsembleSpec& spec,
                                        const std::vector<GeoSet>& sets,
                                        const SweepOptions& opts);

struct OneSidedRow {
  std::string set;
  EstimateCI width_hat;
  EstimateCI sup_pos;
  EstimateCI sup_neg;
  double k2 = 0.0;
  double ratio_pos = 0.0;  // sup_pos.mean / (K^2 w)
  double ratio_neg = 0.0;
};

std::vector<OneSidedRow> one_sided_sweep(const EnsembleSpec& spec,
                                         const std::vector<GeoSet>& sets,
                                         const SweepOptions& opts);

/// Calibration constant: the q-quantile of a batch of ratios. Needs at least
/// 30 finite ratios.
double calibrate_constant(const std::vector<double>& ratios, double q = 0.5);

struct TailPoint {
  double u = 0.0;
  double threshold = 0.0;  // C K^2 (w + u rad)
  Proportion exceed;
  double target = 0.0;     // exp(-u^2)
  bool pass = false;       // exceed.p <= target + Wilson half-width
};

struct TailCurve {
  std::vector<TailPoint> points;
  std::vector<double> sups;  // per trial
  double c_cal = 0.0;
  double width = 0.0;
  double rad = 0.0;
  double k2 = 0.0;
  std::size_t trials = 0;
};

/// sup / (K^2 w(T)) on draws of `spec`, for median calibration of the tail
/// constant. Requires w(T) > 0.
std::vector<double> tail_ratios(const EnsembleSpec& spec, const GeoSet& set,
                                const SweepOptions& opts);

/// Exceedance frequency of sup > C K^2 (w + u rad) for each u.
TailCurve tail_curve(const EnsembleSpec& spec, const GeoSet& set,
                     const std::vector<double>& u_grid, double c_cal,
                     const SweepOptions& opts);

struct LocalProbe {
  Vec x;
  double norm = 0.0;
  double gamma_local = 0.0;  // gamma(T cap |x| B)
};

/// 10 log-spaced norm shells in [rad/100, rad]; directions uniform on the
/// sphere and clipped radially into T, or along random elements for star
/// hulls of clouds. Includes x = 0 when `include_zero`.
std::vector<LocalProbe> local_probes(const GeoSet& set, std::size_t count,
                                     std::size_t n_samples, std::uint64_t seed,
                                     bool include_zero = false, int threads = 1);

struct LocalReport {
  std::size_t probe_violations = 0;
  std::size_t probe_total = 0;
  Proportion trial_violation;  // trials with at least one violated probe
  double target = 0.0;         // exp(-t^2)
  double c_cal = 0.0;
  double t = 0.0;
  std::vector<double> max_ratio;  // per trial, max |Z_x| / (K^2 gamma_x)
  bool pass = false;
};

/// Per-trial max over probes of |Z_x| / (K^2 gamma(T cap |x| B)).
std::vector<double> local_ratios(const EnsembleSpec& spec,
                                 const std::vector<LocalProbe>& probes,
                                 const SweepOptions& opts);

/// Checks |Z_x| <= t C K^2 gamma(T cap |x| B) for every probe and draw.
/// Rejects sets that are not star-shaped.
LocalReport local_check(const EnsembleSpec& spec, const GeoSet& set,
                        const std::vector<LocalProbe>& probes, double t,
                        double c_cal, double max_violation,
                        const SweepOptions& opts);

}  // namespace devbound
