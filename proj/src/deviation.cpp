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

#include "devbound/deviation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "devbound/complexity.hpp"
#include "devbound/parallel.hpp"
#include "devbound/rng.hpp"
#include "devbound/tails.hpp"

namespace devbound {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Best values of Z and -Z with witnesses.
struct Extremes {
  double pos = -kInf;
  double neg = -kInf;
  Vec wpos;
  Vec wneg;
  bool exact = true;

  void offer(double z, const Vec& x) {
    if (z > pos) {
      pos = z;
      wpos = x;
    }
    if (-z > neg) {
      neg = -z;
      wneg = x;
    }
  }
  void scale(double lambda) {
    pos *= lambda;
    neg *= lambda;
    wpos *= lambda;
    wneg *= lambda;
  }
  // Adds x = 0 (Z_0 = 0) to the candidate set.
  void include_origin(Eigen::Index n) {
    if (pos < 0.0) {
      pos = 0.0;
      wpos = Vec::Zero(n);
    }
    if (neg < 0.0) {
      neg = 0.0;
      wneg = Vec::Zero(n);
    }
  }
};

struct Context {
  const Mat& a;
  double root_m;
  std::optional<Mat> sigma_root;
  const DeviationOptions& opts;

  double norm_scale(const Vec& x) const {
    return sigma_root ? (*sigma_root * x).norm() : x.norm();
  }
  double z(const Vec& x) const { return (a * x).norm() - root_m * norm_scale(x); }
};

Extremes extremes(const Context& ctx, const GeoSet& set);

Extremes scan_cloud(const Context& ctx, const GeoSet& cloud, double cap) {
  Extremes ex;
  const Mat& pts = cloud.points();
  const Mat images = ctx.a * pts.transpose();
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    if (cloud.point_norms()[i] > cap + kMembershipTol) continue;
    const Vec p = pts.row(i).transpose();
    ex.offer(images.col(i).norm() - ctx.root_m * ctx.norm_scale(p), p);
  }
  return ex;
}

Extremes scan_diff(const Context& ctx, const GeoSet& dc, double cap,
                   bool star) {
  Extremes ex;
  const Mat& pa = dc.points();
  const Mat& pb = dc.points_b();
  const Mat ya = ctx.a * pa.transpose();
  const Mat yb = ctx.a * pb.transpose();
  for (Eigen::Index i = 0; i < pa.rows(); ++i) {
    for (Eigen::Index j = 0; j < pb.rows(); ++j) {
      const double nrm = dc.pair_norms()(i, j);
      Vec p = (pa.row(i) - pb.row(j)).transpose();
      const double scale_norm =
          ctx.sigma_root ? ctx.norm_scale(p) : nrm;
      const double zp = (ya.col(i) - yb.col(j)).norm() - ctx.root_m * scale_norm;
      if (star) {
        if (nrm == 0.0) continue;
        const double t = std::min(1.0, cap / nrm);
        ex.offer(t * zp, t * p);
      } else {
        if (nrm > cap + kMembershipTol) continue;
        ex.offer(zp, p);
      }
    }
  }
  return ex;
}

Extremes from_singular(const Context& ctx, const Mat& b, const Mat* lift,
                       double r, bool contains_origin) {
  const ExtremeSingular es = extreme_singular_values(b);
  Extremes ex;
  ex.pos = r * (es.sigma_max - ctx.root_m);
  ex.neg = r * (ctx.root_m - es.sigma_min);
  ex.wpos = r * (lift ? Vec(*lift * es.v_max) : es.v_max);
  ex.wneg = r * (lift ? Vec(*lift * es.v_min) : es.v_min);
  if (contains_origin) ex.include_origin(lift ? lift->rows() : b.cols());
  return ex;
}

// Visits s-subsets of {0..n-1} in lexicographic order.
template <class F>
void for_each_combination(Eigen::Index n, Eigen::Index s, F&& f) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(s));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (;;) {
    f(idx);
    Eigen::Index i = s - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - s + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (Eigen::Index j = i + 1; j < s; ++j) {
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
}

Extremes sparse_extremes(const Context& ctx, const GeoSet& set) {
  const Eigen::Index n = set.dim();
  const Eigen::Index s = set.s();
  const double r = set.r();
  Extremes ex;
  const auto visit = [&](const std::vector<Eigen::Index>& support) {
    Mat sub(ctx.a.rows(), s);
    for (Eigen::Index k = 0; k < s; ++k) {
      sub.col(k) = ctx.a.col(support[static_cast<std::size_t>(k)]);
    }
    const ExtremeSingular es = extreme_singular_values(sub);
    const auto embed = [&](const Vec& v) {
      Vec x = Vec::Zero(n);
      for (Eigen::Index k = 0; k < s; ++k) {
        x[support[static_cast<std::size_t>(k)]] = r * v[k];
      }
      return x;
    };
    const double pos = r * (es.sigma_max - ctx.root_m);
    const double neg = r * (ctx.root_m - es.sigma_min);
    if (pos > ex.pos) {
      ex.pos = pos;
      ex.wpos = embed(es.v_max);
    }
    if (neg > ex.neg) {
      ex.neg = neg;
      ex.wneg = embed(es.v_min);
    }
  };
  const std::size_t total = binomial_capped(static_cast<std::size_t>(n),
                                            static_cast<std::size_t>(s),
                                            ctx.opts.max_supports);
  if (total <= ctx.opts.max_supports) {
    for_each_combination(n, s, visit);
  } else {
    ex.exact = false;
    for (std::size_t k = 0; k < ctx.opts.max_supports; ++k) {
      Rng rng(derive_stream(ctx.opts.seed, "sparse-support", k));
      std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
      std::iota(all.begin(), all.end(), Eigen::Index{0});
      for (Eigen::Index i = 0; i < s; ++i) {
        const auto j = i + static_cast<Eigen::Index>(
                               rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
      }
      all.resize(static_cast<std::size_t>(s));
      std::sort(all.begin(), all.end());
      visit(all);
    }
  }
  if (!set.surface()) ex.include_origin(n);
  return ex;
}

Extremes heuristic_extremes(const Context& ctx, const GeoSet& set) {
  if (!has_projection(set)) {
    throw std::invalid_argument("no exact path or projection for " +
                                set.describe());
  }
  Extremes ex;
  ex.exact = false;
  const Eigen::Index n = set.dim();
  const double rad = radius(set);
  const double sigma_max = extreme_singular_values(ctx.a).sigma_max;
  const double lipschitz = sigma_max + ctx.root_m * (ctx.sigma_root ? ctx.sigma_root->norm() : 1.0);
  const auto grad = [&](const Vec& x) -> Vec {
    const Vec ax = ctx.a * x;
    const double nax = ax.norm();
    Vec g = Vec::Zero(n);
    if (nax > 0.0) g += ctx.a.transpose() * ax / nax;
    if (ctx.sigma_root) {
      const Vec sx = *ctx.sigma_root * x;
      const double nsx = sx.norm();
      if (nsx > 0.0) g -= ctx.root_m * (ctx.sigma_root->transpose() * sx) / nsx;
    } else {
      const double nx = x.norm();
      if (nx > 0.0) g -= ctx.root_m * x / nx;
    }
    return g;
  };
  for (const double sign : {1.0, -1.0}) {
    for (int start = 0; start < ctx.opts.starts; ++start) {
      Rng rng(derive_stream(ctx.opts.seed, sign > 0 ? "ascent-pos" : "ascent-neg",
                            static_cast<std::uint64_t>(start)));
      Vec x(n);
      for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.normal();
      x = project(set, x * (rad / std::max(x.norm(), 1e-300)));
      double fx = sign * ctx.z(x);
      ex.offer(ctx.z(x), x);
      double eta = rad / std::max(lipschitz, 1e-300);
      for (int it = 0; it < ctx.opts.iterations; ++it) {
        const Vec cand = project(set, x + eta * sign * grad(x));
        const double fc = sign * ctx.z(cand);
        if (fc >= fx) {
          x = cand;
          fx = fc;
          ex.offer(ctx.z(x), x);
          eta *= 1.5;
        } else {
          eta *= 0.5;
          if (eta < 1e-14 * rad / std::max(lipschitz, 1e-300)) break;
        }
      }
    }
  }
  return ex;
}

Extremes extremes(const Context& ctx, const GeoSet& set) {
  const bool iso = !ctx.sigma_root.has_value();
  if (ctx.opts.force_heuristic) return heuristic_extremes(ctx, set);
  switch (set.kind()) {
    case SetKind::FiniteCloud:
      return scan_cloud(ctx, set, kInf);
    case SetKind::DiffCloud:
      return scan_diff(ctx, set, kInf, false);
    case SetKind::Ball2:
    case SetKind::Sphere:
      if (!iso) break;
      return from_singular(ctx, ctx.a, nullptr, set.r(),
                           set.kind() == SetKind::Ball2);
    case SetKind::Subspace: {
      if (!iso || !std::isfinite(set.r())) break;
      const Mat b = ctx.a * set.basis();
      return from_singular(ctx, b, &set.basis(), set.r(), true);
    }
    case SetKind::SparseVectors:
      if (!iso || !std::isfinite(set.r())) break;
      return sparse_extremes(ctx, set);
    case SetKind::Scaled: {
      Extremes ex = extremes(ctx, set.inner());
      ex.scale(set.lambda());
      return ex;
    }
    case SetKind::StarHull: {
      Extremes ex = extremes(ctx, set.inner());
      ex.include_origin(set.dim());
      return ex;
    }
    case SetKind::BallIntersect: {
      const GeoSet& inner = set.inner();
      if (auto eq = simplify_intersection(inner, set.delta())) {
        return extremes(ctx, *eq);
      }
      if (inner.kind() == SetKind::FiniteCloud) {
        return scan_cloud(ctx, inner, set.delta());
      }
      if (inner.kind() == SetKind::DiffCloud) {
        return scan_diff(ctx, inner, set.delta(), false);
      }
      if (inner.kind() == SetKind::StarHull &&
          inner.inner().kind() == SetKind::DiffCloud) {
        Extremes ex = scan_diff(ctx, inner.inner(), set.delta(), true);
        ex.include_origin(set.dim());
        return ex;
      }
      if (inner.kind() == SetKind::StarHull &&
          inner.inner().kind() == SetKind::FiniteCloud) {
        // Z is positively homogeneous, so each segment peaks at its end.
        Extremes ex;
        const GeoSet& cloud = inner.inner();
        const Mat images = ctx.a * cloud.points().transpose();
        for (Eigen::Index i = 0; i < cloud.points().rows(); ++i) {
          const double nrm = cloud.point_norms()[i];
          if (nrm == 0.0) continue;
          const double t = std::min(1.0, set.delta() / nrm);
          const Vec p = cloud.points().row(i).transpose();
          const double zp = images.col(i).norm() - ctx.root_m * ctx.norm_scale(p);
          ex.offer(t * zp, t * p);
        }
        ex.include_origin(set.dim());
        return ex;
      }
      break;
    }
    default:
      break;
  }
  return heuristic_extremes(ctx, set);
}

}  // namespace

std::size_t binomial_capped(std::size_t n, std::size_t s, std::size_t max) {
  if (s > n) return 0;
  s = std::min(s, n - s);
  long double value = 1.0L;
  for (std::size_t i = 1; i <= s; ++i) {
    value = value * static_cast<long double>(n - s + i) / static_cast<long double>(i);
    if (value > static_cast<long double>(max)) return max + 1;
  }
  return static_cast<std::size_t>(std::llround(value));
}

ExtremeSingular extreme_singular_values(const Mat& a) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  ExtremeSingular out;
  const unsigned flags = m < n ? Eigen::ComputeFullV : Eigen::ComputeThinV;
  Vec sv;
  Mat v;
  if (std::min(m, n) <= 64) {
    Eigen::JacobiSVD<Mat> svd(a, flags);
    sv = svd.singularValues();
    v = svd.matrixV();
  } else {
    Eigen::BDCSVD<Mat> svd(a, flags);
    sv = svd.singularValues();
    v = svd.matrixV();
  }
  out.sigma_max = sv[0];
  out.v_max = v.col(0);
  if (m >= n) {
    out.sigma_min = sv[n - 1];
    out.v_min = v.col(n - 1);
  } else {
    out.sigma_min = 0.0;
    out.v_min = v.col(n - 1);
  }
  return out;
}

DeviationReport sup_deviation(const MatrixSample& a, const GeoSet& set,
                              const DeviationOptions& opts) {
  if (a.entries.cols() != set.dim()) {
    throw std::invalid_argument("dimension mismatch between A and T");
  }
  Context ctx{a.entries, std::sqrt(static_cast<double>(a.entries.rows())),
              std::nullopt, opts};
  if (a.spec.covariance) ctx.sigma_root = spd_sqrt(*a.spec.covariance);
  const Extremes ex = extremes(ctx, set);
  DeviationReport rep;
  rep.sup_pos = ex.pos;
  rep.sup_neg = ex.neg;
  if (ex.pos >= ex.neg) {
    rep.sup_abs = ex.pos;
    rep.witness = ex.wpos;
  } else {
    rep.sup_abs = ex.neg;
    rep.witness = ex.wneg;
  }
  rep.exact = ex.exact;
  rep.m = a.entries.rows();
  rep.n = a.entries.cols();
  rep.set = set.describe();
  rep.draw_index = a.draw_index;
  return rep;
}

// ---------------------------------------------------------------------------
// Experiments

std::vector<std::vector<DeviationReport>> deviation_table(
    const EnsembleSpec& spec, const std::vector<GeoSet>& sets,
    const SweepOptions& opts) {
  validate(spec);
  std::vector<std::vector<DeviationReport>> out(
      sets.size(), std::vector<DeviationReport>(opts.trials));
  parallel_for(opts.trials, opts.threads, [&](std::size_t t) {
    const MatrixSample a = sample_matrix(spec, opts.first_draw + t);
    for (std::size_t s = 0; s < sets.size(); ++s) {
      out[s][t] = sup_deviation(a, sets[s], opts.deviation);
    }
  });
  return out;
}

namespace {

EstimateCI summarize(const std::vector<DeviationReport>& reports,
                     double DeviationReport::*field) {
  std::vector<double> values;
  values.reserve(reports.size());
  bool exact = true;
  for (const auto& r : reports) {
    values.push_back(r.*field);
    exact = exact && r.exact;
  }
  return estimate_from(values, exact);
}

}  // namespace

std::vector<SweepRow> expectation_sweep(const EnsembleSpec& spec,
                                        const std::vector<GeoSet>& sets,
                                        const SweepOptions& opts) {
  const auto table = deviation_table(spec, sets, opts);
  const double k = row_psi2_bound(spec);
  std::vector<SweepRow> rows;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    SweepRow row;
    row.set = sets[s].describe();
    row.gamma_hat = gaussian_complexity_mc(sets[s], opts.n_samples,
                                           opts.gaussian_seed, opts.threads);
    row.sup = summarize(table[s], &DeviationReport::sup_abs);
    row.k2 = k * k;
    row.ratio = row.sup.mean / (row.k2 * row.gamma_hat.mean);
    row.exact = row.sup.exact && row.gamma_hat.exact;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<OneSidedRow> one_sided_sweep(const EnsembleSpec& spec,
                                         const std::vector<GeoSet>& sets,
                                         const SweepOptions& opts) {
  const auto table = deviation_table(spec, sets, opts);
  const double k = row_psi2_bound(spec);
  std::vector<OneSidedRow> rows;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    OneSidedRow row;
    row.set = sets[s].describe();
    row.width_hat = gaussian_width_mc(sets[s], opts.n_samples,
                                      opts.gaussian_seed, opts.threads);
    row.sup_pos = summarize(table[s], &DeviationReport::sup_pos);
    row.sup_neg = summarize(table[s], &DeviationReport::sup_neg);
    row.k2 = k * k;
    const double denom = row.k2 * row.width_hat.mean;
    row.ratio_pos = row.sup_pos.mean / denom;
    row.ratio_neg = row.sup_neg.mean / denom;
    rows.push_back(std::move(row));
  }
  return rows;
}

double calibrate_constant(const std::vector<double>& ratios, double q) {
  if (ratios.size() < 30) {
    throw std::invalid_argument("calibration needs at least 30 trials");
  }
  for (double r : ratios) {
    if (!std::isfinite(r)) {
      throw std::invalid_argument(
          "calibration ratio undefined (zero-complexity set?)");
    }
  }
  const double c = quantile(ratios, q);
  if (!(c > 0.0)) throw std::invalid_argument("calibrated constant is not positive");
  return c;
}

std::vector<double> tail_ratios(const EnsembleSpec& spec, const GeoSet& set,
                                const SweepOptions& opts) {
  const double w =
      gaussian_width_mc(set, opts.n_samples, opts.gaussian_seed, opts.threads).mean;
  if (!(w > 0.0)) {
    throw std::invalid_argument("tail calibration needs w(T) > 0");
  }
  const double k = row_psi2_bound(spec);
  const auto table = deviation_table(spec, {set}, opts);
  std::vector<double> out;
  for (const auto& rep : table[0]) out.push_back(rep.sup_abs / (k * k * w));
  return out;
}

TailCurve tail_curve(const EnsembleSpec& spec, const GeoSet& set,
                     const std::vector<double>& u_grid, double c_cal,
                     const SweepOptions& opts) {
  if (!(c_cal > 0.0)) throw std::invalid_argument("C_cal must be positive");
  TailCurve curve;
  curve.c_cal = c_cal;
  curve.width =
      gaussian_width_mc(set, opts.n_samples, opts.gaussian_seed, opts.threads).mean;
  curve.rad = radius(set);
  const double k = row_psi2_bound(spec);
  curve.k2 = k * k;
  curve.trials = opts.trials;
  const auto table = deviation_table(spec, {set}, opts);
  for (const auto& rep : table[0]) curve.sups.push_back(rep.sup_abs);
  std::vector<double> grid = u_grid;
  std::sort(grid.begin(), grid.end());
  for (double u : grid) {
    TailPoint pt;
    pt.u = u;
    pt.threshold = c_cal * curve.k2 * (curve.width + u * curve.rad);
    std::size_t exceed = 0;
    for (double s : curve.sups) exceed += s > pt.threshold ? 1 : 0;
    pt.exceed = wilson(exceed, curve.sups.size());
    pt.target = std::exp(-u * u);
    pt.pass = pt.exceed.p <= pt.target + 0.5 * (pt.exceed.hi - pt.exceed.lo);
    curve.points.push_back(pt);
  }
  return curve;
}

namespace {

std::optional<Mat> sigma_root_of(const EnsembleSpec& spec) {
  if (!spec.covariance) return std::nullopt;
  return spd_sqrt(*spec.covariance);
}

}  // namespace

std::vector<LocalProbe> local_probes(const GeoSet& set, std::size_t count,
                                     std::size_t n_samples, std::uint64_t seed,
                                     bool include_zero, int threads) {
  if (!is_star_shaped(set)) {
    throw std::invalid_argument("local check needs a star-shaped set; wrap it "
                                "as star(" + set.describe() + ")");
  }
  const double rad = radius(set);
  const Eigen::Index n = set.dim();
  std::vector<LocalProbe> probes;
  if (include_zero) probes.push_back({Vec::Zero(n), 0.0, 0.0});
  for (std::size_t i = 0; probes.size() < count; ++i) {
    const double shell =
        rad * std::pow(10.0, -2.0 + 2.0 * static_cast<double>(i % 10) / 9.0);
    Rng rng(derive_stream(seed, "local-probe", i));
    Vec u(n);
    for (Eigen::Index j = 0; j < n; ++j) u[j] = rng.normal();
    u /= u.norm();
    double reach = 0.0;
    try {
      reach = max_scaling(set, u);
    } catch (const std::invalid_argument&) {
      reach = 0.0;
    }
    Vec x;
    if (reach > 0.0) {
      x = std::min(shell, reach) * u;
    } else {
      // Radial clip of a support witness, which lies in T.
      const Vec w = support(set, u).witness;
      const double wn = w.norm();
      if (wn == 0.0) continue;
      x = std::min(1.0, shell / wn) * w;
    }
    probes.push_back({x, x.norm(), 0.0});
  }
  parallel_for(probes.size(), threads, [&](std::size_t p) {
    auto& probe = probes[p];
    if (probe.norm == 0.0) return;
    probe.gamma_local =
        gaussian_complexity_mc(GeoSet::ball_intersect(set, probe.norm),
                               n_samples, seed, 1)
            .mean;
  });
  return probes;
}

std::vector<double> local_ratios(const EnsembleSpec& spec,
                                 const std::vector<LocalProbe>& probes,
                                 const SweepOptions& opts) {
  validate(spec);
  const double k = row_psi2_bound(spec);
  const auto root = sigma_root_of(spec);
  std::vector<double> out(opts.trials, 0.0);
  parallel_for(opts.trials, opts.threads, [&](std::size_t t) {
    const MatrixSample a = sample_matrix(spec, opts.first_draw + t);
    double best = 0.0;
    for (const auto& probe : probes) {
      if (probe.gamma_local <= 0.0) continue;
      const double z = std::abs(deviation_process(a.entries, probe.x, root));
      best = std::max(best, z / (k * k * probe.gamma_local));
    }
    out[t] = best;
  });
  return out;
}

LocalReport local_check(const EnsembleSpec& spec, const GeoSet& set,
                        const std::vector<LocalProbe>& probes, double t,
                        double c_cal, double max_violation,
                        const SweepOptions& opts) {
  if (!is_star_shaped(set)) {
    throw std::invalid_argument("local check needs a star-shaped set; wrap it "
                                "as star(" + set.describe() + ")");
  }
  if (t < 1.0) throw std::invalid_argument("local check needs t >= 1");
  validate(spec);
  const double k = row_psi2_bound(spec);
  const auto root = sigma_root_of(spec);
  std::vector<std::size_t> violated(opts.trials, 0);
  LocalReport rep;
  rep.max_ratio.assign(opts.trials, 0.0);
  parallel_for(opts.trials, opts.threads, [&](std::size_t trial) {
    const MatrixSample a = sample_matrix(spec, opts.first_draw + trial);
    std::size_t count = 0;
    double best = 0.0;
    for (const auto& probe : probes) {
      const double z = std::abs(deviation_process(a.entries, probe.x, root));
      const double bound = t * c_cal * k * k * probe.gamma_local;
      if (z > bound + 1e-12) ++count;
      if (probe.gamma_local > 0.0) best = std::max(best, z / (k * k * probe.gamma_local));
    }
    violated[trial] = count;
    rep.max_ratio[trial] = best;
  });
  std::size_t bad_trials = 0;
  for (auto v : violated) {
    rep.probe_violations += v;
    bad_trials += v > 0 ? 1 : 0;
  }
  rep.probe_total = probes.size() * opts.trials;
  rep.trial_violation = wilson(bad_trials, opts.trials);
  rep.target = std::exp(-t * t);
  rep.c_cal = c_cal;
  rep.t = t;
  rep.pass = rep.trial_violation.p <= max_violation;
  return rep;
}

}  // namespace devbound
