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

#include "devbound/applications.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "devbound/complexity.hpp"
#include "devbound/deviation.hpp"
#include "devbound/parallel.hpp"
#include "devbound/rng.hpp"

namespace devbound {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

EstimateCI scaled_estimate(EstimateCI e, double factor) {
  e.mean *= factor;
  e.std_error *= factor;
  e.ci_lo *= factor;
  e.ci_hi *= factor;
  return e;
}

double root(Eigen::Index m) { return std::sqrt(static_cast<double>(m)); }

}  // namespace

Vec singular_values(const Mat& a) {
  if (std::min(a.rows(), a.cols()) <= 64) {
    return Eigen::JacobiSVD<Mat>(a).singularValues();
  }
  return Eigen::BDCSVD<Mat>(a).singularValues();
}

SingularReport singular_interval_check(const EnsembleSpec& spec,
                                       std::size_t trials, double c_cal,
                                       std::size_t first_draw, int threads) {
  validate(spec);
  if (spec.m <= spec.n) {
    throw std::invalid_argument("singular value check needs m > n");
  }
  SingularReport rep;
  const double k = row_psi2_bound(spec);
  rep.k2 = k * k;
  rep.c_cal = c_cal;
  rep.lo = root(spec.m) - c_cal * rep.k2 * root(spec.n);
  rep.hi = root(spec.m) + c_cal * rep.k2 * root(spec.n);
  rep.trials.resize(trials);
  parallel_for(trials, threads, [&](std::size_t t) {
    const MatrixSample a = sample_matrix(spec, first_draw + t);
    const Vec sv = singular_values(a.entries);
    auto& row = rep.trials[t];
    row.draw_index = a.draw_index;
    row.sigma_max = sv.maxCoeff();
    row.sigma_min = sv.minCoeff();
    row.violated = row.sigma_min < rep.lo || row.sigma_max > rep.hi;
  });
  for (const auto& row : rep.trials) rep.violations += row.violated ? 1 : 0;
  return rep;
}

// ---------------------------------------------------------------------------

JlReport jl_embed(const GeoSet& cloud, const MatrixSample& a, double c_cal) {
  if (cloud.kind() != SetKind::FiniteCloud) {
    throw std::invalid_argument("jl_embed needs a finite cloud");
  }
  const Mat& pts = cloud.points();
  const Eigen::Index count = pts.rows();
  if (count < 2) throw std::invalid_argument("jl_embed needs at least 2 points");
  if (a.entries.cols() != cloud.dim()) {
    throw std::invalid_argument("dimension mismatch between A and the cloud");
  }
  const Eigen::Index m = a.entries.rows();
  const Mat images = a.entries * pts.transpose();
  JlReport rep;
  rep.draw_index = a.draw_index;
  for (Eigen::Index i = 0; i < count; ++i) {
    for (Eigen::Index j = i + 1; j < count; ++j) {
      const double d = (pts.row(i) - pts.row(j)).norm();
      if (d == 0.0) throw std::invalid_argument("jl_embed: duplicate points");
      const double ratio = (images.col(i) - images.col(j)).norm() / (root(m) * d);
      rep.distortion.push_back(std::abs(ratio - 1.0));
      rep.max_distortion = std::max(rep.max_distortion, rep.distortion.back());
    }
  }
  const double k = row_psi2_bound(a.spec);
  rep.bound = c_cal * k * k * std::sqrt(std::log(static_cast<double>(count))) / root(m);
  return rep;
}

EstimateCI jl_local_bound(const GeoSet& cloud, Eigen::Index i, Eigen::Index j,
                          Eigen::Index m, std::size_t n_samples,
                          std::uint64_t seed, int threads) {
  if (cloud.kind() != SetKind::FiniteCloud) {
    throw std::invalid_argument("jl_local_bound needs a finite cloud");
  }
  const Eigen::Index count = cloud.points().rows();
  if (i < 0 || j < 0 || i >= count || j >= count) {
    throw std::out_of_range("jl_local_bound: pair index out of range");
  }
  const double d = (cloud.points().row(i) - cloud.points().row(j)).norm();
  if (d == 0.0) throw std::invalid_argument("jl_local_bound: degenerate pair");
  const GeoSet local = GeoSet::ball_intersect(
      GeoSet::star_hull(GeoSet::difference(cloud, cloud)), d);
  return scaled_estimate(gaussian_complexity_mc(local, n_samples, seed, threads),
                         1.0 / root(m));
}

EstimateCI jl_global_bound(const GeoSet& cloud, Eigen::Index m,
                           std::size_t n_samples, std::uint64_t seed,
                           int threads) {
  return scaled_estimate(
      gaussian_complexity_mc(GeoSet::difference(cloud, cloud), n_samples, seed,
                             threads),
      1.0 / root(m));
}

// ---------------------------------------------------------------------------

double min_image_norm(const Mat& a, const GeoSet& set) {
  if (set.kind() == SetKind::FiniteCloud) {
    for (Eigen::Index i = 0; i < set.points().rows(); ++i) {
      if (std::abs(set.point_norms()[i] - 1.0) > 1e-9) {
        throw std::invalid_argument("escape needs points on the unit sphere");
      }
    }
    return (a * set.points().transpose()).colwise().norm().minCoeff();
  }
  if (set.kind() == SetKind::SparseVectors && set.surface() && set.r() == 1.0) {
    // The unit sphere of one support: sigma_min over its columns.
    MatrixSample sample;
    sample.entries = a;
    sample.spec.m = a.rows();
    sample.spec.n = a.cols();
    return std::sqrt(static_cast<double>(a.rows())) -
           sup_deviation(sample, set).sup_neg;
  }
  throw std::invalid_argument(
      "escape needs a unit-sphere cloud or sparse unit sphere, got " +
      set.describe());
}

EscapeReport escape_check(const EnsembleSpec& spec, const GeoSet& set,
                          std::size_t trials, double c_cal, double gamma_hat,
                          std::size_t first_draw, int threads) {
  validate(spec);
  EscapeReport rep;
  rep.min_norm.assign(trials, 0.0);
  parallel_for(trials, threads, [&](std::size_t t) {
    rep.min_norm[t] = min_image_norm(sample_matrix(spec, first_draw + t).entries, set);
  });
  std::size_t escaped = 0;
  for (double v : rep.min_norm) {
    const bool e = v > 1e-8 * root(spec.m);
    rep.escaped.push_back(e);
    escaped += e ? 1 : 0;
  }
  rep.frequency = wilson(escaped, trials);
  rep.gamma_hat = gamma_hat;
  const double k = row_psi2_bound(spec);
  rep.m_required = c_cal * std::pow(k, 4) * gamma_hat * gamma_hat;
  return rep;
}

MonotoneCurve make_monotone_curve(const std::vector<Eigen::Index>& m_grid,
                                  const std::vector<std::size_t>& successes,
                                  std::size_t trials) {
  if (m_grid.size() != successes.size()) {
    throw std::invalid_argument("curve: grid and counts differ in length");
  }
  MonotoneCurve curve;
  std::vector<double> p;
  std::vector<double> w;
  for (std::size_t i = 0; i < m_grid.size(); ++i) {
    CurvePoint pt;
    pt.m = m_grid[i];
    pt.rate = wilson(successes[i], trials);
    p.push_back(pt.rate.p);
    w.push_back(static_cast<double>(trials));
    curve.points.push_back(pt);
  }
  const auto fit = isotonic_increasing(p, w);
  for (std::size_t i = 0; i < fit.size(); ++i) {
    auto& pt = curve.points[i];
    pt.smoothed = fit[i];
    const double width = pt.rate.hi - pt.rate.lo;
    const double gap = std::abs(pt.rate.p - pt.smoothed);
    curve.isotonic_excess = std::max(
        curve.isotonic_excess, width > 0.0 ? gap / width : (gap > 0.0 ? kNaN : 0.0));
  }
  curve.monotone = curve.isotonic_excess <= 1.0;
  curve.m50 = kNaN;
  for (std::size_t i = 0; i < fit.size(); ++i) {
    if (fit[i] >= 0.5) {
      if (i == 0 || fit[i] == fit[i - 1]) {
        curve.m50 = static_cast<double>(m_grid[i]);
      } else {
        const double f = (0.5 - fit[i - 1]) / (fit[i] - fit[i - 1]);
        curve.m50 = static_cast<double>(m_grid[i - 1]) +
                    f * static_cast<double>(m_grid[i] - m_grid[i - 1]);
      }
      break;
    }
  }
  return curve;
}

MonotoneCurve escape_curve(Family family, Eigen::Index n, Eigen::Index s,
                           const std::vector<Eigen::Index>& m_grid,
                           std::size_t trials, std::uint64_t seed,
                           int threads) {
  const GeoSet set = GeoSet::sparse(n, s, 1.0, true);
  std::vector<std::size_t> counts;
  for (Eigen::Index m : m_grid) {
    EnsembleSpec spec{family, m, n, std::nullopt, seed};
    counts.push_back(escape_check(spec, set, trials, 1.0, 0.0, 0, threads)
                         .frequency.successes);
  }
  return make_monotone_curve(m_grid, counts, trials);
}

// ---------------------------------------------------------------------------

double mstar_radius_lb(const Mat& a, const GeoSet& set, int n_starts,
                       std::uint64_t seed, int iterations) {
  if (!has_projection(set) || !is_star_shaped(set)) {
    throw std::invalid_argument("M* needs a star-shaped set with projection: " +
                                set.describe());
  }
  const Eigen::Index n = a.cols();
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
  const Vec sv = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    rank += sv[i] > 1e-10 * std::max(sv[0], 1e-300) ? 1 : 0;
  }
  if (rank >= n) return 0.0;
  const Mat kernel = svd.matrixV().rightCols(n - rank);
  const double rad = radius(set);
  const double start_norm = std::isfinite(rad) ? 2.0 * rad : 1.0;
  const auto ray = [&](const Vec& x) {
    const double nx = x.norm();
    if (nx == 0.0) return 0.0;
    return std::min(max_scaling(set, x) * nx, std::isfinite(rad) ? rad : nx);
  };
  double best = 0.0;
  for (int k = 0; k < n_starts; ++k) {
    Rng rng(derive_stream(seed, "mstar-start", static_cast<std::uint64_t>(k)));
    Vec g(kernel.cols());
    for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = rng.normal();
    Vec x = kernel * g;
    x *= start_norm / x.norm();
    best = std::max(best, ray(x));
    for (int it = 0; it < iterations; ++it) {
      const Vec in_set = project(set, x);
      const Vec next = kernel * (kernel.transpose() * in_set);
      const double change = (next - x).norm();
      x = next;
      if (change <= 1e-12 * std::max(1.0, x.norm())) break;
    }
    best = std::max(best, ray(x));
  }
  return best;
}

MstarReport mstar_check(const EnsembleSpec& spec, const GeoSet& set,
                        std::size_t trials, int n_starts, double c_cal,
                        double gamma_hat, std::size_t first_draw,
                        int threads) {
  validate(spec);
  MstarReport rep;
  const double k = row_psi2_bound(spec);
  rep.bound = c_cal * k * k * gamma_hat / root(spec.m);
  rep.radius_lb.assign(trials, 0.0);
  parallel_for(trials, threads, [&](std::size_t t) {
    const MatrixSample a = sample_matrix(spec, first_draw + t);
    rep.radius_lb[t] = mstar_radius_lb(a.entries, set, n_starts,
                                       mix64(spec.seed ^ a.draw_index));
  });
  for (double r : rep.radius_lb) rep.violations += r > rep.bound ? 1 : 0;
  return rep;
}

ImageReport random_image_radius(const MatrixSample& a, const GeoSet& cloud,
                                double c_cal, double gamma_hat) {
  if (cloud.kind() != SetKind::FiniteCloud) {
    throw std::invalid_argument("image radius needs a finite cloud");
  }
  ImageReport rep;
  rep.rad_image =
      (a.entries * cloud.points().transpose()).colwise().norm().maxCoeff();
  const double k = row_psi2_bound(a.spec);
  rep.bound = root(a.entries.rows()) * radius(cloud) + c_cal * k * k * gamma_hat;
  rep.holds = rep.rad_image <= rep.bound;
  return rep;
}

// ---------------------------------------------------------------------------

RecoveryResult constrained_least_squares(const Mat& a, const Vec& y,
                                         const GeoSet& set, double lambda,
                                         const Vec& truth,
                                         const SolverOptions& opts) {
  if (a.rows() != y.size() || a.cols() != set.dim() || truth.size() != a.cols()) {
    throw std::invalid_argument("least squares: dimension mismatch");
  }
  if (!(lambda >= 1.0)) throw std::invalid_argument("lambda must be >= 1");
  if (!has_projection(set)) {
    throw std::invalid_argument("least squares needs a projection for " +
                                set.describe());
  }
  const GeoSet scaled = lambda == 1.0 ? set : GeoSet::scaled(lambda, set);
  RecoveryResult res;
  res.nonconvex = !is_convex(set);
  double step = opts.step;
  if (step <= 0.0) {
    const double smax = singular_values(a)[0];
    step = smax > 0.0 ? 1.0 / (smax * smax) : 1.0;
  }
  Vec x = project(scaled, Vec::Zero(a.cols()));
  Vec r = a * x - y;
  double f = 0.5 * r.squaredNorm();
  const double floor = 1e-30 * std::max(1.0, y.squaredNorm());
  for (int it = 1; it <= opts.max_iter; ++it) {
    res.iterations = it;
    const Vec next = project(scaled, x - step * (a.transpose() * r));
    const Vec rn = a * next - y;
    const double fn = 0.5 * rn.squaredNorm();
    const double decrease = f - fn;
    // A zero tolerance asks for a fixed point; the objective alone flattens
    // out near sqrt(eps) accuracy in x.
    const bool stalled = opts.tolerance > 0.0
                             ? std::abs(decrease) <= opts.tolerance * f
                             : next == x;
    if (fn <= f || res.nonconvex) {
      x = next;
      r = rn;
    }
    if (stalled || std::min(f, fn) <= floor) {
      res.converged = res.nonconvex ? decrease >= 0.0 : true;
      f = std::min(f, fn);
      break;
    }
    f = fn;
  }
  res.x_hat = x;
  res.objective = 0.5 * r.squaredNorm();
  res.h = x - truth;
  res.v = res.h / (1.0 + lambda);
  res.delta = res.v.norm();
  res.in_set = contains(scaled, x, 1e-8);
  const Vec z = y - a * truth;
  const Vec ah = a * res.h;
  const double tol = 1e-8 * std::max(1.0, y.squaredNorm());
  res.surrogate_ok = ah.squaredNorm() <= 2.0 * ah.dot(z) + tol;
  return res;
}

Vec sparse_signal(Eigen::Index n, Eigen::Index s, std::uint64_t seed,
                  std::uint64_t index) {
  if (s < 0 || s > n) throw std::invalid_argument("need 0 <= s <= n");
  Rng rng(derive_stream(seed, "signal", index));
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  Vec x = Vec::Zero(n);
  for (Eigen::Index i = 0; i < s; ++i) {
    const auto j = i + static_cast<Eigen::Index>(
                           rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    x[idx[static_cast<std::size_t>(i)]] = rng.normal();
  }
  return x;
}

bool exact_recovery(const RecoveryResult& r, const Vec& truth) {
  return r.h.norm() <= 1e-4 * truth.norm();
}

MonotoneCurve phase_transition(const PhaseOptions& opts,
                               const std::vector<Eigen::Index>& m_grid) {
  std::vector<std::size_t> counts;
  for (Eigen::Index m : m_grid) {
    EnsembleSpec spec{opts.family, m, opts.n, std::nullopt, opts.seed};
    validate(spec);
    std::vector<char> ok(opts.trials, 0);
    parallel_for(opts.trials, opts.threads, [&](std::size_t t) {
      const Vec truth = sparse_signal(opts.n, opts.s, opts.seed, t);
      const MatrixSample a = sample_matrix(spec, t);
      const GeoSet set = GeoSet::l1_ball(opts.n, truth.lpNorm<1>());
      const Vec y = a.entries * truth;
      const auto res =
          constrained_least_squares(a.entries, y, set, 1.0, truth, opts.solver);
      ok[t] = exact_recovery(res, truth) ? 1 : 0;
    });
    counts.push_back(static_cast<std::size_t>(std::count(ok.begin(), ok.end(), 1)));
  }
  return make_monotone_curve(m_grid, counts, opts.trials);
}

// ---------------------------------------------------------------------------

namespace {

Vec noise_vector(Eigen::Index m, double sigma, std::uint64_t seed,
                 std::uint64_t index) {
  Rng rng(derive_stream(seed, "noise", index));
  Vec z(m);
  for (Eigen::Index i = 0; i < m; ++i) z[i] = sigma * rng.normal();
  return z;
}

}  // namespace

SelectionReport model_selection_sweep(const EnsembleSpec& spec,
                                      const GeoSet& set, double c_cal,
                                      const SelectionOptions& opts) {
  validate(spec);
  if (!is_convex(set) || !is_symmetric(set)) {
    throw std::invalid_argument("model selection needs a convex symmetric set");
  }
  if (!(opts.term2_weight > 0.0)) throw std::invalid_argument("term2_weight must be positive");
  if (set.dim() != spec.n) throw std::invalid_argument("dimension mismatch");
  for (double l : opts.lambda_grid) {
    if (!(l >= 1.0)) throw std::invalid_argument("lambda grid must be >= 1");
  }
  const double k = row_psi2_bound(spec);
  const double rm = root(spec.m);
  const std::size_t nl = opts.lambda_grid.size();
  SelectionReport rep;
  rep.c_cal = c_cal;
  rep.rows.resize(opts.trials * nl);
  std::vector<char> exact(opts.trials * nl, 1);
  parallel_for(opts.trials, opts.threads, [&](std::size_t t) {
    const std::size_t trial = opts.first_trial + t;
    const MatrixSample a = sample_matrix(spec, trial);
    Vec truth = sparse_signal(spec.n, opts.s, spec.seed, trial);
    const double reach = max_scaling(set, truth);
    if (!std::isfinite(reach)) {
      throw std::invalid_argument("model selection needs a bounded set");
    }
    truth *= reach;
    const Vec z = noise_vector(spec.m, opts.sigma, spec.seed, trial);
    const Vec y = a.entries * truth + z;
    for (std::size_t l = 0; l < nl; ++l) {
      const double lambda = opts.lambda_grid[l];
      const auto res = constrained_least_squares(a.entries, y, set, lambda,
                                                 truth, opts.solver);
      SelectionRow& row = rep.rows[t * nl + l];
      row.trial = trial;
      row.draw_index = a.draw_index;
      row.lambda = lambda;
      row.delta = res.delta;
      row.z_norm = z.norm();
      row.converged = res.converged;
      if (res.delta > 0.0) {
        const EstimateCI g = gaussian_complexity_mc(
            GeoSet::ball_intersect(set, res.delta), opts.n_samples,
            opts.gaussian_seed, 1);
        row.gamma_local = g.mean;
        exact[t * nl + l] = g.exact ? 1 : 0;
      }
      row.term1 = k * k * row.gamma_local / rm;
      row.term2 = k * std::sqrt(row.gamma_local * row.z_norm /
                                (static_cast<double>(spec.m) * (1.0 + lambda)));
      const double rhs = row.term1 + opts.term2_weight * row.term2;
      row.ratio = res.delta == 0.0 ? 0.0 : res.delta / rhs;
      row.satisfied = res.delta <= c_cal * rhs + 1e-12;
    }
  });
  rep.exact_path = std::all_of(exact.begin(), exact.end(), [](char e) { return e != 0; });
  std::vector<std::size_t> per_lambda(nl, 0);
  std::vector<std::size_t> per_lambda_total(nl, 0);
  std::size_t uniform_ok = 0;
  std::size_t uniform_total = 0;
  for (std::size_t t = 0; t < opts.trials; ++t) {
    bool all = true;
    bool any = false;
    double worst = 0.0;
    for (std::size_t l = 0; l < nl; ++l) {
      const auto& row = rep.rows[t * nl + l];
      if (!row.converged) {
        ++rep.excluded;
        continue;
      }
      any = true;
      ++per_lambda_total[l];
      per_lambda[l] += row.satisfied ? 1 : 0;
      all = all && row.satisfied;
      worst = std::max(worst, row.ratio);
    }
    if (any) {
      rep.uniform_ratio.push_back(worst);
      ++uniform_total;
      uniform_ok += all ? 1 : 0;
    }
  }
  // With nothing converged the proportion is empty: p = 0, interval [0, 1].
  const auto prop = [](std::size_t ok, std::size_t total) {
    return total == 0 ? Proportion{0, 0, 0.0, 0.0, 1.0} : wilson(ok, total);
  };
  for (std::size_t l = 0; l < nl; ++l) {
    rep.per_lambda.push_back(prop(per_lambda[l], per_lambda_total[l]));
  }
  rep.uniform = prop(uniform_ok, uniform_total);
  return rep;
}

SubspaceReport subspace_selection(const EnsembleSpec& spec,
                                  const GeoSet& subspace, double sigma,
                                  double c_cal, std::size_t trials,
                                  std::size_t first_trial, int threads) {
  validate(spec);
  if (subspace.kind() != SetKind::Subspace || subspace.dim() != spec.n) {
    throw std::invalid_argument("subspace selection needs a Subspace in R^n");
  }
  const Mat& basis = subspace.basis();
  const Eigen::Index d = basis.cols();
  const GeoSet set =
      GeoSet::subspace(basis, std::numeric_limits<double>::infinity());
  const double k = row_psi2_bound(spec);
  const double m = static_cast<double>(spec.m);
  SubspaceReport rep;
  rep.c_cal = c_cal;
  rep.rows.resize(trials);
  parallel_for(trials, threads, [&](std::size_t t) {
    const std::size_t trial = first_trial + t;
    const MatrixSample a = sample_matrix(spec, trial);
    Rng rng(derive_stream(spec.seed, "signal", trial));
    Vec coef(d);
    for (Eigen::Index i = 0; i < d; ++i) coef[i] = rng.normal();
    const Vec truth = basis * coef;
    const Vec z = noise_vector(spec.m, sigma, spec.seed, trial);
    const Vec y = a.entries * truth + z;
    const auto res = constrained_least_squares(a.entries, y, set, 1.0, truth);
    auto& row = rep.rows[t];
    row.trial = trial;
    row.h2 = res.h.squaredNorm();
    row.z2 = z.squaredNorm();
    row.ratio = row.h2 * m * m / (std::pow(k, 4) * static_cast<double>(d) * row.z2);
    row.satisfied = row.ratio <= c_cal;
  });
  std::size_t ok = 0;
  for (const auto& row : rep.rows) ok += row.satisfied ? 1 : 0;
  rep.satisfied = wilson(ok, trials);
  return rep;
}

}  // namespace devbound
