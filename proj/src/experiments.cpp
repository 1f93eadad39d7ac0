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

#include "devbound/experiments.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <variant>

#include "devbound/applications.hpp"
#include "devbound/complexity.hpp"
#include "devbound/deviation.hpp"
#include "devbound/format.hpp"
#include "devbound/parallel.hpp"
#include "devbound/rng.hpp"
#include "devbound/set_descriptor.hpp"
#include "devbound/tails.hpp"

namespace devbound {

namespace {

using Json = nlohmann::ordered_json;
using Cell = std::variant<double, std::int64_t, std::uint64_t, bool, std::string>;

struct Table {
  std::string suffix;  // empty for the main table
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

std::string cell_text(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "1" : "0";
        } else if constexpr (std::is_same_v<T, std::string>) {
          if (v.find_first_of(",\"\n") == std::string::npos) return v;
          std::string q = "\"";
          for (char ch : v) {
            if (ch == '"') q += '"';
            q += ch;
          }
          return q + "\"";
        } else {
          return std::to_string(v);
        }
      },
      c);
}

Json cell_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) {
          if (!std::isfinite(v)) return Json(format_double(v));
          return Json(v);
        } else {
          return Json(v);
        }
      },
      c);
}

struct Outcome {
  std::vector<Table> tables;
  Json aggregates = Json::object();
  std::size_t violations = 0;
  bool certified = true;
  std::optional<double> c_cal;
};

struct Env {
  const ExperimentConfig& cfg;
  int threads;
  std::uint64_t cal_seed;
};

Family family_of(const ExperimentConfig& c) {
  try {
    return parse_family(c.family);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

std::vector<GeoSet> load_sets(const ExperimentConfig& c) {
  if (c.sets.empty()) throw ConfigError("experiment '" + c.experiment + "' needs a set");
  std::vector<GeoSet> out;
  for (const auto& d : c.sets) {
    try {
      out.push_back(parse_set(d, c.base_dir));
    } catch (const std::exception& e) {
      throw ConfigError("set '" + d + "': " + e.what());
    }
  }
  for (const auto& s : out) {
    if (s.dim() != out.front().dim()) throw ConfigError("sets differ in dimension");
    if (c.n != 0 && s.dim() != c.n) {
      throw ConfigError("set dimension " + std::to_string(s.dim()) +
                        " does not match n = " + std::to_string(c.n));
    }
  }
  return out;
}

EnsembleSpec spec_of(const ExperimentConfig& c, Eigen::Index n,
                     std::uint64_t seed, std::optional<long> m = {}) {
  EnsembleSpec spec{family_of(c), m ? *m : c.m, n, std::nullopt, seed};
  try {
    validate(spec);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return spec;
}

double k2_of(const EnsembleSpec& spec) {
  const double k = row_psi2_bound(spec);
  return k * k;
}

Json estimate_json(const EstimateCI& e) {
  return Json{{"mean", e.mean}, {"std_error", e.std_error}, {"ci_lo", e.ci_lo},
              {"ci_hi", e.ci_hi}, {"n_samples", e.n_samples}, {"exact", e.exact}};
}

Json proportion_json(const Proportion& p) {
  return Json{{"successes", p.successes}, {"total", p.total}, {"p", p.p},
              {"lo", p.lo}, {"hi", p.hi}};
}

std::vector<Eigen::Index> grid_of(const ExperimentConfig& c) {
  if (c.m_grid.empty()) throw ConfigError("m_grid is empty");
  return {c.m_grid.begin(), c.m_grid.end()};
}

SweepOptions sweep_of(const Env& env, std::size_t trials) {
  SweepOptions o;
  o.trials = trials;
  o.n_samples = env.cfg.samples;
  o.gaussian_seed = env.cfg.seed;
  o.threads = env.threads;
  o.deviation.starts = env.cfg.starts;
  o.deviation.seed = env.cfg.seed;
  return o;
}

// Median of sup |Z_T| / (K^2 gamma(T)) over a calibration batch.
double deviation_calibration(const Env& env, const GeoSet& set) {
  const auto& c = env.cfg;
  const EnsembleSpec spec = spec_of(c, set.dim(), env.cal_seed);
  SweepOptions o = sweep_of(env, c.c_cal.trials);
  const double gamma = gaussian_complexity_mc(set, c.samples, c.seed, env.threads).mean;
  if (!(gamma > 0.0)) {
    throw ConfigError("calibration ratio undefined: gamma(T) = 0");
  }
  const auto table = deviation_table(spec, {set}, o);
  std::vector<double> ratios;
  for (const auto& r : table[0]) ratios.push_back(r.sup_abs / (k2_of(spec) * gamma));
  return calibrate_constant(ratios, 0.5);
}

double calibrate_env(const Env& env) {
  const auto& c = env.cfg;
  if (!c.c_cal.calibrate) return c.c_cal.value;
  const std::string& e = c.experiment;
  if (e == "deviate" || e == "mstar" || e == "image") {
    return deviation_calibration(env, load_sets(c).front());
  }
  if (e == "tail") {
    const GeoSet set = load_sets(c).front();
    const EnsembleSpec spec = spec_of(c, set.dim(), env.cal_seed);
    return calibrate_constant(tail_ratios(spec, set, sweep_of(env, c.c_cal.trials)), 0.5);
  }
  if (e == "local") {
    const GeoSet set = load_sets(c).front();
    const EnsembleSpec spec = spec_of(c, set.dim(), env.cal_seed);
    const auto probes = local_probes(set, c.probes, c.samples, c.seed, false, env.threads);
    return calibrate_constant(local_ratios(spec, probes, sweep_of(env, c.c_cal.trials)), 0.5);
  }
  if (e == "singvals") {
    const EnsembleSpec spec = spec_of(c, c.n, env.cal_seed);
    const auto rep = singular_interval_check(spec, c.c_cal.trials, 1.0, 0, env.threads);
    std::vector<double> ratios;
    for (const auto& t : rep.trials) {
      const double rm = std::sqrt(static_cast<double>(spec.m));
      ratios.push_back(std::max(t.sigma_max - rm, rm - t.sigma_min) /
                       (rep.k2 * std::sqrt(static_cast<double>(spec.n))));
    }
    return calibrate_constant(ratios, 0.5);
  }
  if (e == "select") {
    // The corollary is stated at probability 0.99, so the constant is the
    // 0.99 quantile of the uniform-over-lambda ratio.
    const GeoSet set = load_sets(c).front();
    const EnsembleSpec spec = spec_of(c, set.dim(), env.cal_seed);
    std::vector<double> ratios;
    if (set.kind() == SetKind::Subspace) {
      const auto rep = subspace_selection(spec, set, c.sigma, 1.0, c.c_cal.trials, 0,
                                          env.threads);
      for (const auto& r : rep.rows) ratios.push_back(r.ratio);
    } else {
      SelectionOptions o;
      o.lambda_grid = c.lambda_grid;
      o.sigma = c.sigma;
      o.term2_weight = c.term2_weight;
      o.s = c.s;
      o.trials = c.c_cal.trials;
      o.n_samples = c.samples;
      o.gaussian_seed = c.seed;
      o.threads = env.threads;
      o.solver.max_iter = c.max_iter;
      ratios = model_selection_sweep(spec, set, 1.0, o).uniform_ratio;
    }
    return calibrate_constant(ratios, 0.99);
  }
  throw ConfigError("experiment '" + e + "' takes a fixed c_cal");
}

// ---------------------------------------------------------------------------

Outcome run_width(const Env& env, bool absolute) {
  const auto& c = env.cfg;
  Outcome out;
  Table t{"", {"set_descriptor", "n", "statistic", "mean", "std_error", "ci_lo", "ci_hi",
               "n_samples", "exactness", "closed_form", "seed"}, {}};
  Json per_set = Json::array();
  for (const auto& set : load_sets(c)) {
    const EstimateCI e = absolute
                             ? gaussian_complexity_mc(set, c.samples, c.seed, env.threads)
                             : gaussian_width_mc(set, c.samples, c.seed, env.threads);
    const auto cf = absolute ? complexity_closed_form(set) : width_closed_form(set);
    const double closed = cf ? *cf : std::numeric_limits<double>::quiet_NaN();
    t.rows.push_back({set.describe(), static_cast<std::int64_t>(set.dim()),
                      std::string(absolute ? "gamma" : "width"), e.mean, e.std_error,
                      e.ci_lo, e.ci_hi, static_cast<std::uint64_t>(e.n_samples),
                      std::string(e.exact ? "exact" : "heuristic"), closed, c.seed});
    Json j = estimate_json(e);
    j["set"] = set.describe();
    if (cf) {
      j["closed_form"] = *cf;
      const bool ok = std::abs(e.mean - *cf) <= 4.0 * e.std_error + 1e-12 * std::abs(*cf);
      j["matches_closed_form"] = ok;
      if (!ok) ++out.violations;
    }
    per_set.push_back(j);
  }
  out.tables.push_back(std::move(t));
  out.aggregates["sets"] = per_set;
  out.certified = out.violations == 0;
  return out;
}

Outcome run_increments(const Env& env) {
  const auto& c = env.cfg;
  if (c.n < 1) throw ConfigError("increments needs n >= 1");
  const EnsembleSpec spec = spec_of(c, c.n, c.seed);
  std::vector<std::pair<Vec, Vec>> pairs;
  for (std::size_t k = 0; k < c.pairs; ++k) {
    Rng rng(derive_stream(c.seed, "pair", k));
    Vec x(c.n), y(c.n);
    for (long i = 0; i < c.n; ++i) x[i] = rng.normal();
    for (long i = 0; i < c.n; ++i) y[i] = rng.normal();
    pairs.emplace_back(x / x.norm(), y / y.norm());
  }
  const auto res = increment_sweep(spec, pairs, c.trials, env.threads);
  Outcome out;
  Table t{"", {"pair_id", "dist", "psi2", "psi2_ratio", "bracket_lo", "bracket_hi",
               "degenerate", "n_trials", "seed"}, {}};
  std::vector<double> ratios, dist;
  for (std::size_t k = 0; k < res.size(); ++k) {
    const auto& r = res[k];
    t.rows.push_back({static_cast<std::uint64_t>(k), r.distance, r.estimate.norm_value,
                      r.ratio, r.estimate.bracket_lo, r.estimate.bracket_hi,
                      r.estimate.degenerate, static_cast<std::uint64_t>(c.trials), c.seed});
    ratios.push_back(r.ratio);
    dist.push_back(r.distance);
  }
  out.tables.push_back(std::move(t));
  const double med = median(ratios);
  const double mx = *std::max_element(ratios.begin(), ratios.end());
  const double rho = ratios.size() > 2 ? spearman(dist, ratios) : 0.0;
  out.aggregates["median_ratio"] = med;
  out.aggregates["max_over_median"] = mx / med;
  out.aggregates["spearman_distance"] = rho;
  const bool bounded = mx / med <= 5.0;
  const bool flat = std::abs(rho) < 0.3;
  out.aggregates["bounded"] = bounded;
  out.aggregates["trend_free"] = flat;
  out.violations = (bounded ? 0 : 1) + (flat ? 0 : 1);
  out.certified = out.violations == 0;
  return out;
}

Outcome run_deviate(const Env& env) {
  const auto& c = env.cfg;
  const auto sets = load_sets(c);
  const EnsembleSpec spec = spec_of(c, sets.front().dim(), c.seed);
  const SweepOptions o = sweep_of(env, c.trials);
  const auto table = deviation_table(spec, sets, o);
  Outcome out;
  Table per_trial{"", {"set", "trial", "draw_index", "seed", "sup_abs", "sup_pos",
                       "sup_neg", "exact"}, {}};
  Table per_set{"sets", {"set", "gamma_hat", "gamma_se", "sup_mean", "sup_se", "k2",
                         "ratio", "exact"}, {}};
  const double k2 = k2_of(spec);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  Json js = Json::array();
  for (std::size_t s = 0; s < sets.size(); ++s) {
    std::vector<double> sups;
    bool exact = true;
    for (std::size_t t = 0; t < table[s].size(); ++t) {
      const auto& r = table[s][t];
      per_trial.rows.push_back({sets[s].describe(), static_cast<std::uint64_t>(t),
                                r.draw_index, c.seed, r.sup_abs, r.sup_pos, r.sup_neg,
                                r.exact});
      sups.push_back(r.sup_abs);
      exact = exact && r.exact;
    }
    const EstimateCI sup = estimate_from(sups, exact);
    const EstimateCI g = gaussian_complexity_mc(sets[s], c.samples, c.seed, env.threads);
    const double ratio = sup.mean / (k2 * g.mean);
    per_set.rows.push_back({sets[s].describe(), g.mean, g.std_error, sup.mean,
                            sup.std_error, k2, ratio, exact && g.exact});
    if (std::isfinite(ratio)) {
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    js.push_back(Json{{"set", sets[s].describe()}, {"gamma_hat", g.mean},
                      {"sup_mean", sup.mean}, {"ratio", ratio}, {"exact", exact && g.exact}});
  }
  out.tables.push_back(std::move(per_trial));
  out.tables.push_back(std::move(per_set));
  out.aggregates["sets"] = js;
  const double band = hi > 0.0 ? hi / lo : 1.0;
  out.aggregates["ratio_band"] = band;
  out.certified = band <= 3.0;
  out.violations = out.certified ? 0 : 1;
  return out;
}

Outcome run_tail(const Env& env, double c_cal) {
  const auto& c = env.cfg;
  const GeoSet set = load_sets(c).front();
  const EnsembleSpec spec = spec_of(c, set.dim(), c.seed);
  const TailCurve curve = tail_curve(spec, set, c.u_grid, c_cal, sweep_of(env, c.trials));
  Outcome out;
  Table t{"", {"trial", "draw_index", "seed", "sup_abs"}, {}};
  for (std::size_t k = 0; k < curve.sups.size(); ++k) {
    t.rows.push_back({static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(k),
                      c.seed, curve.sups[k]});
  }
  Table cv{"curve", {"u", "threshold", "exceed", "total", "p", "lo", "hi", "target",
                     "pass"}, {}};
  Json pts = Json::array();
  for (const auto& p : curve.points) {
    cv.rows.push_back({p.u, p.threshold, static_cast<std::uint64_t>(p.exceed.successes),
                       static_cast<std::uint64_t>(p.exceed.total), p.exceed.p,
                       p.exceed.lo, p.exceed.hi, p.target, p.pass});
    pts.push_back(Json{{"u", p.u}, {"exceed", proportion_json(p.exceed)},
                       {"target", p.target}, {"pass", p.pass}});
    if (!p.pass) ++out.violations;
  }
  out.tables.push_back(std::move(t));
  out.tables.push_back(std::move(cv));
  out.aggregates["width"] = curve.width;
  out.aggregates["rad"] = curve.rad;
  out.aggregates["k2"] = curve.k2;
  out.aggregates["points"] = pts;
  out.certified = out.violations == 0;
  return out;
}

Outcome run_local(const Env& env, double c_cal) {
  const auto& c = env.cfg;
  const GeoSet set = load_sets(c).front();
  const EnsembleSpec spec = spec_of(c, set.dim(), c.seed);
  std::vector<LocalProbe> probes;
  try {
    probes = local_probes(set, c.probes, c.samples, c.seed, false, env.threads);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto rep = local_check(spec, set, probes, c.t, c_cal, 1.0, sweep_of(env, c.trials));
  Outcome out;
  Table pt{"probes", {"probe", "norm", "gamma_local"}, {}};
  for (std::size_t k = 0; k < probes.size(); ++k) {
    pt.rows.push_back({static_cast<std::uint64_t>(k), probes[k].norm, probes[k].gamma_local});
  }
  Table t{"", {"trial", "draw_index", "seed", "max_ratio", "violated"}, {}};
  for (std::size_t k = 0; k < rep.max_ratio.size(); ++k) {
    t.rows.push_back({static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(k), c.seed,
                      rep.max_ratio[k], rep.max_ratio[k] > c.t * c_cal + 1e-12});
  }
  out.tables.push_back(std::move(t));
  out.tables.push_back(std::move(pt));
  const double half = 0.5 * (rep.trial_violation.hi - rep.trial_violation.lo);
  const bool pass = rep.trial_violation.p <= rep.target + half;
  out.aggregates["trial_violation"] = proportion_json(rep.trial_violation);
  out.aggregates["probe_violations"] = rep.probe_violations;
  out.aggregates["probe_total"] = rep.probe_total;
  out.aggregates["target"] = rep.target;
  out.aggregates["t"] = rep.t;
  out.violations = rep.trial_violation.successes;
  out.certified = pass;
  return out;
}

Outcome run_singvals(const Env& env, double c_cal) {
  const auto& c = env.cfg;
  const EnsembleSpec spec = spec_of(c, c.n, c.seed);
  SingularReport rep;
  try {
    rep = singular_interval_check(spec, c.trials, c_cal, 0, env.threads);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  Outcome out;
  Table t{"", {"trial", "draw_index", "seed", "sigma_min", "sigma_max", "violated"}, {}};
  for (std::size_t k = 0; k < rep.trials.size(); ++k) {
    const auto& r = rep.trials[k];
    t.rows.push_back({static_cast<std::uint64_t>(k), r.draw_index, c.seed, r.sigma_min,
                      r.sigma_max, r.violated});
  }
  out.tables.push_back(std::move(t));
  out.aggregates["interval_lo"] = rep.lo;
  out.aggregates["interval_hi"] = rep.hi;
  out.aggregates["k2"] = rep.k2;
  out.violations = rep.violations;
  out.certified = rep.violations == 0;
  return out;
}

Outcome run_jl(const Env& env, double c_cal) {
  const auto& c = env.cfg;
  const GeoSet cloud = load_sets(c).front();
  if (cloud.kind() != SetKind::FiniteCloud) throw ConfigError("jl needs a finite cloud");
  const EnsembleSpec spec = spec_of(c, cloud.dim(), c.seed);
  std::vector<JlReport> reps(c.trials);
  parallel_for(c.trials, env.threads, [&](std::size_t t) {
    reps[t] = jl_embed(cloud, sample_matrix(spec, t), c_cal);
  });
  Outcome out;
  Table t{"", {"trial", "draw_index", "seed", "max_distortion", "bound", "within_epsilon"}, {}};
  std::size_t ok = 0;
  for (std::size_t k = 0; k < reps.size(); ++k) {
    const bool within = reps[k].max_distortion <= c.epsilon;
    ok += within ? 1 : 0;
    t.rows.push_back({static_cast<std::uint64_t>(k), reps[k].draw_index, c.seed,
                      reps[k].max_distortion, reps[k].bound, within});
  }
  out.tables.push_back(std::move(t));
  const Proportion within = wilson(ok, c.trials);
  out.aggregates["within_epsilon"] = proportion_json(within);
  out.aggregates["epsilon"] = c.epsilon;
  out.certified = within.p >= 0.95;
  out.violations = c.trials - ok;
  if (c.local_trials > 0) {
    Table lt{"local", {"trial", "i", "j", "distance", "local", "local_se", "global",
                       "global_se", "beats"}, {}};
    std::size_t beats = 0;
    for (std::size_t k = 0; k < c.local_trials; ++k) {
      const std::uint64_t cseed = derive_stream(c.seed, "jl-cluster", k);
      const GeoSet clusters = cluster_cloud(40, cloud.dim(), 2, 10.0, 0.1, cseed);
      Rng rng(derive_stream(c.seed, "jl-pair", k));
      // Even indices form cluster 0.
      const auto i = static_cast<Eigen::Index>(2 * rng.below(20));
      auto j = static_cast<Eigen::Index>(2 * rng.below(19));
      if (j >= i) j += 2;
      const EstimateCI local =
          jl_local_bound(clusters, i, j, c.m, c.samples, c.seed, env.threads);
      const EstimateCI global = jl_global_bound(clusters, c.m, c.samples, c.seed, env.threads);
      const bool b = local.ci_hi < global.ci_lo;
      beats += b ? 1 : 0;
      lt.rows.push_back({static_cast<std::uint64_t>(k), static_cast<std::int64_t>(i),
                         static_cast<std::int64_t>(j),
                         (clusters.points().row(i) - clusters.points().row(j)).norm(),
                         local.mean, local.std_error, global.mean, global.std_error, b});
    }
    out.tables.push_back(std::move(lt));
    const Proportion pb = wilson(beats, c.local_trials);
    out.aggregates["local_beats_global"] = proportion_json(pb);
    if (pb.p < 0.9) {
      out.certified = false;
      ++out.violations;
    }
  }
  return out;
}

Outcome run_escape(const Env& env, double c_cal) {
  const auto& c = env.cfg;
  const GeoSet set = load_sets(c).front();
  const double gamma = gaussian_complexity_mc(set, c.samples, c.seed, env.threads).mean;
  Outcome out;
  Table t{"", {"m", "trial", "draw_index", "seed", "min_norm", "escaped"}, {}};
  std::vector<std::size_t> counts;
  const auto grid = grid_of(c);
  double m_required = 0.0;
  for (Eigen::Index m : grid) {
    const EnsembleSpec spec = spec_of(c, set.dim(), c.seed, static_cast<long>(m));
    EscapeReport rep;
    try {
      rep = escape_check(spec, set, c.trials, c_cal, gamma, 0, env.threads);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    m_required = rep.m_required;
    for (std::size_t k = 0; k < rep.min_norm.size(); ++k) {
      t.rows.push_back({static_cast<std::int64_t>(m), static_cast<std::uint64_t>(k),
                        static_cast<std::uint64_t>(k), c.seed, rep.min_norm[k],
                        static_cast<bool>(rep.escaped[k])});
    }
    counts.push_back(rep.frequency.successes);
  }
  const MonotoneCurve curve = make_monotone_curve(grid, counts, c.trials);
  Table cv{"curve", {"m", "successes", "total", "p", "lo", "hi", "smoothed"}, {}};
  for (const auto& p : curve.points) {
    cv.rows.push_back({static_cast<std::int64_t>(p.m),
                       static_cast<std::uint64_t>(p.rate.successes),
                       static_cast<std::uint64_t>(p.rate.total), p.rate.p, p.rate.lo,
                       p.rate.hi, p.smoothed});
  }
  out.tables.push_back(std::move(t));
  out.tables.push_back(std::move(cv));
  out.aggregates["gamma_hat"] = gamma;
  out.aggregates["m_required"] = m_required;
  out.aggregates["monotone"] = curve.monotone;
  out.aggregates["isotonic_excess"] = curve.isotonic_excess;
  out.aggregates["final_frequency"] = proportion_json(curve.points.back().rate);
  out.certified = curve.monotone;
  out.violations = curve.monotone ? 0 : 1;
  return out;
}

Outcome run_mstar(const Env& env, double c_cal) {
  const auto& c = env.cfg;
  const GeoSet set = load_sets(c).front();
  const EnsembleSpec spec = spec_of(c, set.dim(), c.seed);
  const double gamma = gaussian_complexity_mc(set, c.samples, c.seed, env.threads).mean;
  MstarReport rep;
  try {
    rep = mstar_check(spec, set, c.trials, c.starts, c_cal, gamma, 0, env.threads);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  Outcome out;
  Table t{"", {"trial", "draw_index", "seed", "radius_lb", "bound", "violated"}, {}};
  for (std::size_t k = 0; k < rep.radius_lb.size(); ++k) {
    t.rows.push_back({static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(k), c.seed,
                      rep.radius_lb[k], rep.bound, rep.radius_lb[k] > rep.bound});
  }
  out.tables.push_back(std::move(t));
  out.aggregates["gamma_hat"] = gamma;
  out.aggregates["bound"] = rep.bound;
  out.aggregates["mean_radius_lb"] = mean(rep.radius_lb);
  out.violations = rep.violations;
  out.certified = rep.violations == 0;
  return out;
}

Outcome run_image(const Env& env, double c_cal) {
  const auto& c = env.cfg;
  const GeoSet cloud = load_sets(c).front();
  if (cloud.kind() != SetKind::FiniteCloud) throw ConfigError("image needs a finite cloud");
  const EnsembleSpec spec = spec_of(c, cloud.dim(), c.seed);
  const double gamma = gaussian_complexity_mc(cloud, c.samples, c.seed, env.threads).mean;
  std::vector<ImageReport> reps(c.trials);
  parallel_for(c.trials, env.threads, [&](std::size_t t) {
    reps[t] = random_image_radius(sample_matrix(spec, t), cloud, c_cal, gamma);
  });
  Outcome out;
  Table t{"", {"trial", "draw_index", "seed", "rad_image", "bound", "holds"}, {}};
  for (std::size_t k = 0; k < reps.size(); ++k) {
    t.rows.push_back({static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(k), c.seed,
                      reps[k].rad_image, reps[k].bound, reps[k].holds});
    out.violations += reps[k].holds ? 0 : 1;
  }
  out.tables.push_back(std::move(t));
  out.aggregates["gamma_hat"] = gamma;
  out.certified = out.violations == 0;
  return out;
}

Outcome run_recover(const Env& env) {
  const auto& c = env.cfg;
  if (c.n < 1) throw ConfigError("recover needs n >= 1");
  const EnsembleSpec spec = spec_of(c, c.n, c.seed);
  SolverOptions solver;
  solver.max_iter = c.max_iter;
  std::vector<RecoveryResult> res(c.trials);
  std::vector<double> truth_norm(c.trials);
  parallel_for(c.trials, env.threads, [&](std::size_t t) {
    const Vec truth = sparse_signal(c.n, c.s, c.seed, t);
    const MatrixSample a = sample_matrix(spec, t);
    Vec y = a.entries * truth;
    Rng rng(derive_stream(c.seed, "noise", t));
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += c.sigma * rng.normal();
    res[t] = constrained_least_squares(
        a.entries, y, GeoSet::l1_ball(c.n, truth.lpNorm<1>()), 1.0, truth, solver);
    truth_norm[t] = truth.norm();
  });
  Outcome out;
  Table t{"", {"trial", "draw_index", "seed", "h_norm", "relative_error", "success",
               "iterations", "converged", "in_set", "surrogate_ok"}, {}};
  std::size_t ok = 0;
  for (std::size_t k = 0; k < res.size(); ++k) {
    const auto& r = res[k];
    const bool success = r.h.norm() <= 1e-4 * truth_norm[k];
    ok += success ? 1 : 0;
    if (r.converged && (!r.surrogate_ok || !r.in_set)) ++out.violations;
    t.rows.push_back({static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(k), c.seed,
                      r.h.norm(), r.h.norm() / truth_norm[k], success,
                      static_cast<std::int64_t>(r.iterations), r.converged, r.in_set,
                      r.surrogate_ok});
  }
  out.tables.push_back(std::move(t));
  out.aggregates["success"] = proportion_json(wilson(ok, c.trials));
  out.certified = out.violations == 0;
  return out;
}

Outcome run_select(const Env& env, double c_cal) {
  const auto& c = env.cfg;
  const GeoSet set = load_sets(c).front();
  const EnsembleSpec spec = spec_of(c, set.dim(), c.seed);
  Outcome out;
  if (set.kind() == SetKind::Subspace) {
    const auto rep = subspace_selection(spec, set, c.sigma, c_cal, c.trials, 0, env.threads);
    Table t{"", {"trial", "draw_index", "seed", "h2", "z2", "ratio", "satisfied"}, {}};
    for (const auto& r : rep.rows) {
      t.rows.push_back({static_cast<std::uint64_t>(r.trial),
                        static_cast<std::uint64_t>(r.trial), c.seed, r.h2, r.z2, r.ratio,
                        r.satisfied});
      out.violations += r.satisfied ? 0 : 1;
    }
    out.tables.push_back(std::move(t));
    out.aggregates["uniform"] = proportion_json(rep.satisfied);
    out.certified = rep.satisfied.p >= 0.95;
    return out;
  }
  SelectionOptions o;
  o.lambda_grid = c.lambda_grid;
  o.sigma = c.sigma;
  o.term2_weight = c.term2_weight;
  o.s = c.s;
  o.trials = c.trials;
  o.n_samples = c.samples;
  o.gaussian_seed = c.seed;
  o.threads = env.threads;
  o.solver.max_iter = c.max_iter;
  SelectionReport rep;
  try {
    rep = model_selection_sweep(spec, set, c_cal, o);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  Table t{"", {"trial", "draw_index", "seed", "lambda", "delta", "gamma_local", "term1",
               "term2", "ratio", "z_norm", "converged", "satisfied"}, {}};
  for (const auto& r : rep.rows) {
    t.rows.push_back({static_cast<std::uint64_t>(r.trial), r.draw_index, c.seed, r.lambda,
                      r.delta, r.gamma_local, r.term1, r.term2, r.ratio, r.z_norm,
                      r.converged, r.satisfied});
  }
  out.tables.push_back(std::move(t));
  Json per = Json::array();
  for (std::size_t l = 0; l < rep.per_lambda.size(); ++l) {
    Json j = proportion_json(rep.per_lambda[l]);
    j["lambda"] = c.lambda_grid[l];
    per.push_back(j);
  }
  out.aggregates["uniform"] = proportion_json(rep.uniform);
  out.aggregates["per_lambda"] = per;
  out.aggregates["excluded_rows"] = rep.excluded;
  out.aggregates["exact_path"] = rep.exact_path;
  out.violations = rep.uniform.total - rep.uniform.successes;
  out.certified = rep.exact_path && rep.uniform.p >= 0.95;
  return out;
}

Outcome run_phase(const Env& env) {
  const auto& c = env.cfg;
  PhaseOptions o;
  o.family = family_of(c);
  o.n = c.n;
  o.s = c.s;
  o.trials = c.trials;
  o.seed = c.seed;
  o.threads = env.threads;
  o.solver.max_iter = c.max_iter;
  if (o.n < 1 || o.s < 1 || o.s > o.n) throw ConfigError("phase needs 1 <= s <= n");
  const MonotoneCurve curve = phase_transition(o, grid_of(c));
  Outcome out;
  Table t{"", {"m", "successes", "total", "p", "lo", "hi", "smoothed", "seed"}, {}};
  for (const auto& p : curve.points) {
    t.rows.push_back({static_cast<std::int64_t>(p.m),
                      static_cast<std::uint64_t>(p.rate.successes),
                      static_cast<std::uint64_t>(p.rate.total), p.rate.p, p.rate.lo,
                      p.rate.hi, p.smoothed, c.seed});
  }
  out.tables.push_back(std::move(t));
  out.aggregates["m50"] = std::isfinite(curve.m50) ? Json(curve.m50) : Json(nullptr);
  out.aggregates["monotone"] = curve.monotone;
  out.aggregates["isotonic_excess"] = curve.isotonic_excess;
  out.certified = curve.monotone;
  out.violations = curve.monotone ? 0 : 1;
  return out;
}

Outcome dispatch(const Env& env) {
  const std::string& e = env.cfg.experiment;
  if (e == "width") return run_width(env, false);
  if (e == "gamma") return run_width(env, true);
  if (e == "increments") return run_increments(env);
  if (e == "recover") return run_recover(env);
  if (e == "phase") return run_phase(env);
  const double c_cal = calibrate_env(env);
  Outcome out;
  if (e == "deviate") out = run_deviate(env);
  else if (e == "tail") out = run_tail(env, c_cal);
  else if (e == "local") out = run_local(env, c_cal);
  else if (e == "singvals") out = run_singvals(env, c_cal);
  else if (e == "jl") out = run_jl(env, c_cal);
  else if (e == "escape") out = run_escape(env, c_cal);
  else if (e == "mstar") out = run_mstar(env, c_cal);
  else if (e == "image") out = run_image(env, c_cal);
  else if (e == "select") out = run_select(env, c_cal);
  else throw ConfigError("unknown experiment '" + e + "'");
  out.c_cal = c_cal;
  return out;
}

void write_table(const std::filesystem::path& path, const Table& t,
                 const std::string& header, const std::string& format,
                 const std::string& hash) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  if (format == "json") {
    Json j;
    j["header"] = header;
    j["config_hash"] = hash;
    j["columns"] = t.columns;
    Json rows = Json::array();
    for (const auto& r : t.rows) {
      Json row = Json::array();
      for (const auto& cell : r) row.push_back(cell_json(cell));
      rows.push_back(row);
    }
    j["rows"] = rows;
    os << j.dump(1) << '\n';
  } else {
    os << header << '\n';
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
      os << (i ? "," : "") << t.columns[i];
    }
    os << '\n';
    for (const auto& r : t.rows) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << cell_text(r[i]);
      os << '\n';
    }
  }
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

Env make_env(const ExperimentConfig& config) {
  validate_config(config);
  return Env{config, resolve_threads(config.threads), resolved_calibration_seed(config)};
}

}  // namespace

double calibrate(const ExperimentConfig& config) {
  return calibrate_env(make_env(config));
}

RunSummary run(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const Env env = make_env(config);
  Outcome out = dispatch(env);
  RunSummary sum;
  sum.experiment = config.experiment;
  sum.config_hash = config_hash(config);
  sum.aggregates = out.aggregates;
  sum.violations = out.violations;
  sum.certified = out.certified;
  sum.c_cal = out.c_cal;

  const std::filesystem::path dir(config.out);
  std::filesystem::create_directories(dir);
  const std::string header =
      "# devbound " + config.experiment + " config_hash=" + sum.config_hash;
  const std::string ext = config.format == "json" ? ".json" : ".csv";
  for (const auto& t : out.tables) {
    const std::string name =
        config.experiment + (t.suffix.empty() ? "" : "_" + t.suffix) + ext;
    write_table(dir / name, t, header, config.format, sum.config_hash);
    sum.artifacts.push_back((dir / name).string());
  }
  sum.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  Json j;
  j["experiment"] = config.experiment;
  j["seed"] = config.seed;
  Json params = Json::object();
  for (const auto& [k, v] : to_pairs(config)) params[k] = v;
  params["calibration_seed"] = std::to_string(env.cal_seed);
  j["params"] = params;
  j["aggregates"] = sum.aggregates;
  if (sum.c_cal) j["c_cal"] = *sum.c_cal;
  j["config_hash"] = sum.config_hash;
  j["violations"] = sum.violations;
  j["certified"] = sum.certified;
  const auto summary_path = dir / (config.experiment + ".summary.json");
  sum.artifacts.push_back(summary_path.string());
  j["artifacts"] = sum.artifacts;
  j["wall_time_s"] = sum.wall_time_s;
  std::ofstream os(summary_path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + summary_path.string());
  os << j.dump(2) << '\n';
  return sum;
}

}  // namespace devbound
