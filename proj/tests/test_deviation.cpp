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

#include "devbound/complexity.hpp"
#include "devbound/deviation.hpp"
#include "oracles.hpp"

using namespace devbound;

namespace {

MatrixSample draw(Eigen::Index m, Eigen::Index n, std::uint64_t seed, std::uint64_t t = 0,
                  Family f = Family::Gaussian) {
  return sample_matrix(EnsembleSpec{f, m, n, std::nullopt, seed}, t);
}

double cloud_oracle(const Mat& a, const Mat& pts) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    best = std::max(best, std::abs(oracle::z(a, pts.row(i).transpose())));
  }
  return best;
}

Vec unit(Eigen::Index n, Eigen::Index i) {
  Vec e = Vec::Zero(n);
  e[i] = 1.0;
  return e;
}

}  // namespace

TEST_CASE("trivial sets") {
  const auto a = draw(10, 4, 1);
  const auto zero = sup_deviation(a, GeoSet::singleton(Vec::Zero(4)));
  CHECK(zero.sup_abs == 0.0);
  CHECK(zero.sup_pos == 0.0);
  CHECK(zero.sup_neg == 0.0);

  Vec x(4);
  x << 0.5, -1.0, 2.0, 0.0;
  const auto one = sup_deviation(a, GeoSet::singleton(x));
  CHECK(one.exact);
  CHECK(one.sup_abs == doctest::Approx(std::abs(oracle::z(a.entries, x))).epsilon(1e-12));
  CHECK(one.sup_abs == std::max(one.sup_pos, one.sup_neg));
  CHECK(one.m == 10);
  CHECK(one.n == 4);
  CHECK_THROWS_AS(sup_deviation(a, GeoSet::ball2(5)), std::invalid_argument);
}

TEST_CASE("clouds match a brute-force scan and the witness attains the value") {
  std::mt19937_64 gen(2);
  for (int k = 0; k < 20; ++k) {
    const auto a = draw(15, 6, 3, k);
    const Mat pts = oracle::random_mat(gen, 200, 6);
    const auto r = sup_deviation(a, GeoSet::cloud(pts));
    CHECK(r.exact);
    CHECK(r.sup_abs == doctest::Approx(cloud_oracle(a.entries, pts)).epsilon(1e-12));
    CHECK(std::abs(std::abs(oracle::z(a.entries, r.witness)) - r.sup_abs) < 1e-9);
  }
}

TEST_CASE("difference clouds match the pairwise scan") {
  std::mt19937_64 gen(4);
  const Mat x = oracle::random_mat(gen, 25, 5);
  const Mat y = oracle::random_mat(gen, 12, 5);
  const auto a = draw(9, 5, 5);
  Mat diffs(25 * 12, 5);
  for (int i = 0; i < 25; ++i)
    for (int j = 0; j < 12; ++j) diffs.row(i * 12 + j) = x.row(i) - y.row(j);
  const auto r = sup_deviation(a, GeoSet::difference(GeoSet::cloud(x), GeoSet::cloud(y)));
  CHECK(r.exact);
  CHECK(r.sup_abs == doctest::Approx(cloud_oracle(a.entries, diffs)).epsilon(1e-12));
  const auto m = sup_deviation(a, diff_cloud(GeoSet::cloud(x), GeoSet::cloud(y)));
  CHECK(m.sup_abs == doctest::Approx(r.sup_abs).epsilon(1e-12));
}

TEST_CASE("one-sparse vectors scan the columns") {
  const auto a = draw(30, 12, 6);
  double best = 0.0;
  for (int j = 0; j < 12; ++j) {
    best = std::max(best, std::abs(a.entries.col(j).norm() - std::sqrt(30.0)));
  }
  const auto r = sup_deviation(a, GeoSet::sparse(12, 1, 1.0, true));
  CHECK(r.exact);
  CHECK(r.sup_abs == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("balls, spheres and planes against an angle scan") {
  for (int k = 0; k < 5; ++k) {
    const auto a = draw(7, 2, 7, k);
    const double scan = oracle::plane_sphere_sup(a.entries, unit(2, 0), unit(2, 1), 1.5);
    const auto ball = sup_deviation(a, GeoSet::ball2(2, 1.5));
    const auto sph = sup_deviation(a, GeoSet::sphere(2, 1.5));
    CHECK(ball.exact);
    CHECK(ball.sup_abs == doctest::Approx(scan).epsilon(1e-8));
    CHECK(sph.sup_abs == doctest::Approx(scan).epsilon(1e-8));
  }
  std::mt19937_64 gen(8);
  for (int k = 0; k < 5; ++k) {
    const auto a = draw(11, 6, 8, k);
    Eigen::HouseholderQR<Mat> qr(oracle::random_mat(gen, 6, 2));
    const Mat u = qr.householderQ() * Mat::Identity(6, 2);
    const auto r = sup_deviation(a, GeoSet::subspace(u, 2.0));
    CHECK(r.exact);
    CHECK(r.sup_abs ==
          doctest::Approx(oracle::plane_sphere_sup(a.entries, u.col(0), u.col(1), 2.0))
              .epsilon(1e-8));
  }
}

TEST_CASE("two-sparse sets against per-support angle scans") {
  for (int k = 0; k < 3; ++k) {
    const auto a = draw(8, 7, 9, k);
    double best = 0.0;
    oracle::for_each_subset(7, 2, [&](const std::vector<int>& idx) {
      best = std::max(best, oracle::plane_sphere_sup(a.entries, unit(7, idx[0]),
                                                     unit(7, idx[1]), 1.0));
    });
    for (bool surface : {true, false}) {
      const auto r = sup_deviation(a, GeoSet::sparse(7, 2, 1.0, surface));
      CHECK(r.exact);
      CHECK(r.sup_abs == doctest::Approx(best).epsilon(1e-8));
    }
  }
}

TEST_CASE("sampled supports are flagged inexact") {
  const auto a = draw(8, 30, 10);
  DeviationOptions opts;
  opts.max_supports = 100;
  const auto r = sup_deviation(a, GeoSet::sparse(30, 3, 1.0, true), opts);
  CHECK_FALSE(r.exact);
  CHECK(r.sup_abs <= sup_deviation(a, GeoSet::sparse(30, 3, 1.0, true)).sup_abs + 1e-12);
  CHECK(binomial_capped(30, 3, 100000) == 4060);
  CHECK(binomial_capped(30, 3, 100) == 101);
  CHECK(binomial_capped(5, 0, 10) == 1);
  CHECK(binomial_capped(5, 6, 10) == 0);
}

TEST_CASE("star hulls and caps of clouds") {
  std::mt19937_64 gen(11);
  const Mat pts = oracle::random_mat(gen, 40, 5);
  const auto cloud = GeoSet::cloud(pts);
  for (int k = 0; k < 5; ++k) {
    const auto a = draw(12, 5, 12, k);
    const auto star = sup_deviation(a, GeoSet::star_hull(cloud));
    CHECK(star.exact);
    CHECK(star.sup_abs == doctest::Approx(cloud_oracle(a.entries, pts)).epsilon(1e-12));
    const double delta = 0.8;
    Mat clipped = pts;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      clipped.row(i) *= std::min(1.0, delta / pts.row(i).norm());
    }
    const auto cap = sup_deviation(a, GeoSet::ball_intersect(GeoSet::star_hull(cloud), delta));
    CHECK(cap.exact);
    CHECK(cap.sup_abs == doctest::Approx(cloud_oracle(a.entries, clipped)).epsilon(1e-12));
    CHECK(cap.witness.norm() <= delta + 1e-12);
  }
}

TEST_CASE("homogeneity and monotonicity per draw") {
  std::mt19937_64 gen(13);
  const Mat pts = oracle::random_mat(gen, 60, 8);
  const auto small = GeoSet::cloud(pts.topRows(20));
  const auto large = GeoSet::cloud(pts);
  for (int k = 0; k < 10; ++k) {
    const auto a = draw(20, 8, 14, k);
    const auto base = sup_deviation(a, large);
    for (double lam : {0.5, 2.0, 4.0}) {
      const auto s = sup_deviation(a, GeoSet::scaled(lam, large));
      CHECK(s.sup_abs == doctest::Approx(lam * base.sup_abs).epsilon(1e-12));
      CHECK(s.sup_pos == doctest::Approx(lam * base.sup_pos).epsilon(1e-12));
    }
    const auto sm = sup_deviation(a, small);
    CHECK(sm.sup_abs <= base.sup_abs);
    CHECK(sm.sup_pos <= base.sup_pos);
    CHECK(sm.sup_neg <= base.sup_neg);
    const auto b = sup_deviation(a, GeoSet::ball2(8, 1.0));
    CHECK(sup_deviation(a, GeoSet::ball2(8, 3.0)).sup_abs == doctest::Approx(3.0 * b.sup_abs));
  }
}

TEST_CASE("whitening consistency") {
  Mat sigma(3, 3);
  sigma << 4.0, 1.0, 0.0, 1.0, 2.0, 0.5, 0.0, 0.5, 1.0;
  const EnsembleSpec spec{Family::Gaussian, 25, 3, sigma, 15};
  const Mat root = spd_sqrt(sigma);
  std::mt19937_64 gen(16);
  const Mat pts = oracle::random_mat(gen, 50, 3);
  for (int k = 0; k < 10; ++k) {
    const auto a = sample_matrix(spec, k);
    const auto direct = sup_deviation(a, GeoSet::cloud(pts));
    const auto white = sup_deviation(whiten(a), GeoSet::cloud(pts * root));
    CHECK(std::abs(direct.sup_abs - white.sup_abs) < 1e-9);
    CHECK(std::abs(direct.sup_pos - white.sup_pos) < 1e-9);
  }
}

TEST_CASE("the heuristic never exceeds the exact value") {
  std::mt19937_64 gen(17);
  DeviationOptions h;
  h.force_heuristic = true;
  for (int k = 0; k < 5; ++k) {
    const auto a = draw(10, 6, 18, k);
    for (const GeoSet& set : {GeoSet::ball2(6), GeoSet::sparse(6, 2, 1.0, true),
                              GeoSet::cloud(oracle::random_mat(gen, 30, 6))}) {
      const auto ex = sup_deviation(a, set);
      const auto he = sup_deviation(a, set, h);
      CHECK_FALSE(he.exact);
      CHECK(he.sup_abs <= ex.sup_abs + 1e-9);
      CHECK(he.sup_abs >= 0.9 * ex.sup_abs);
    }
  }
}

TEST_CASE("extreme singular values") {
  std::mt19937_64 gen(19);
  const Mat a = oracle::random_mat(gen, 9, 4);
  const auto e = extreme_singular_values(a);
  Eigen::JacobiSVD<Mat> svd(a);
  CHECK(e.sigma_max == doctest::Approx(svd.singularValues()(0)));
  CHECK(e.sigma_min == doctest::Approx(svd.singularValues()(3)));
  CHECK((a * e.v_min).norm() == doctest::Approx(e.sigma_min));
  CHECK((a * e.v_max).norm() == doctest::Approx(e.sigma_max));
  const auto wide = extreme_singular_values(a.transpose());
  CHECK(wide.sigma_min == 0.0);
  CHECK((a.transpose() * wide.v_min).norm() < 1e-10);
  CHECK(wide.v_min.norm() == doctest::Approx(1.0));
  const Mat big = oracle::random_mat(gen, 120, 80);
  Eigen::JacobiSVD<Mat> bsvd(big);
  const auto be = extreme_singular_values(big);
  CHECK(be.sigma_min == doctest::Approx(bsvd.singularValues()(79)).epsilon(1e-8));
  CHECK(be.sigma_max == doctest::Approx(bsvd.singularValues()(0)).epsilon(1e-8));
}

TEST_CASE("sweeps share draws and are deterministic across threads") {
  const EnsembleSpec spec{Family::Rademacher, 20, 6, std::nullopt, 21};
  std::mt19937_64 gen(22);
  const auto cloud = GeoSet::cloud(oracle::random_mat(gen, 30, 6));
  SweepOptions o;
  o.trials = 40;
  o.n_samples = 500;
  o.gaussian_seed = 3;
  o.threads = 1;
  const auto t1 = deviation_table(spec, {cloud, GeoSet::scaled(2.0, cloud)}, o);
  o.threads = 4;
  const auto t4 = deviation_table(spec, {cloud, GeoSet::scaled(2.0, cloud)}, o);
  REQUIRE(t1.size() == 2);
  REQUIRE(t1[0].size() == 40);
  for (std::size_t t = 0; t < 40; ++t) {
    CHECK(t1[0][t].sup_abs == t4[0][t].sup_abs);
    CHECK(t1[1][t].sup_abs == doctest::Approx(2.0 * t1[0][t].sup_abs).epsilon(1e-12));
    CHECK(t1[0][t].draw_index == t);
  }
  const auto rows = expectation_sweep(spec, {cloud, GeoSet::scaled(2.0, cloud)}, o);
  CHECK(rows[1].ratio == doctest::Approx(rows[0].ratio).epsilon(1e-12));
  CHECK(rows[0].k2 == doctest::Approx(1.0 / std::log(2.0)));
  CHECK(rows[0].sup.n_samples == 40);
}

TEST_CASE("one-sided statistics") {
  const EnsembleSpec spec{Family::Gaussian, 20, 5, std::nullopt, 23};
  SweepOptions o;
  o.trials = 400;
  o.n_samples = 500;
  Vec x = Vec::Ones(5) / std::sqrt(5.0);
  const auto rows = one_sided_sweep(spec, {GeoSet::singleton(x)}, o);
  const auto two = expectation_sweep(spec, {GeoSet::singleton(x)}, o);
  CHECK(rows[0].sup_pos.mean < two[0].sup.mean);
  CHECK(rows[0].sup_neg.mean < two[0].sup.mean);
  // For a single point sup Z and sup -Z are Z_x and -Z_x.
  CHECK(rows[0].sup_pos.mean == doctest::Approx(-rows[0].sup_neg.mean));
  const auto table = deviation_table(spec, {GeoSet::singleton(x)}, o);
  double plus = 0.0;
  for (const auto& r : table[0]) plus += std::max(0.0, r.sup_pos);
  CHECK(plus / 400.0 < two[0].sup.mean);
}

TEST_CASE("calibration needs enough ratios") {
  std::vector<double> r(29, 1.0);
  CHECK_THROWS(calibrate_constant(r));
  r.push_back(3.0);
  CHECK(calibrate_constant(r) == 1.0);
  CHECK(calibrate_constant(r, 1.0) == 3.0);
  r.push_back(std::nan(""));
  CHECK_THROWS(calibrate_constant(r));
}

TEST_CASE("tail curves") {
  const EnsembleSpec spec{Family::Gaussian, 30, 8, std::nullopt, 24};
  const auto cloud = [] { std::mt19937_64 g(25); return GeoSet::cloud(oracle::random_mat(g, 20, 8)); }();
  SweepOptions o;
  o.trials = 301;
  o.n_samples = 2000;
  o.gaussian_seed = 9;
  const auto ratios = tail_ratios(spec, cloud, o);
  const double c = calibrate_constant(ratios);
  const auto curve = tail_curve(spec, cloud, {0.0, 0.5, 1.0, 2.0, 50.0}, c, o);
  REQUIRE(curve.points.size() == 5);
  CHECK(curve.points[0].exceed.p == doctest::Approx(0.5).epsilon(0.02));
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    CHECK(curve.points[i].exceed.p <= curve.points[i - 1].exceed.p);
    CHECK(curve.points[i].threshold > curve.points[i - 1].threshold);
  }
  CHECK(curve.points[4].exceed.p == 0.0);
  CHECK(curve.points[4].pass);
  CHECK(curve.points[2].target == doctest::Approx(std::exp(-1.0)));
  CHECK(curve.sups.size() == 301);
}

TEST_CASE("local probes and the local envelope") {
  const auto ball = GeoSet::ball2(6);
  const auto probes = local_probes(ball, 31, 4000, 5, true);
  REQUIRE(probes.size() == 31);
  bool saw_zero = false;
  for (const auto& p : probes) {
    CHECK(contains(ball, p.x));
    CHECK(p.norm == doctest::Approx(p.x.norm()));
    if (p.norm == 0.0) {
      saw_zero = true;
      CHECK(p.gamma_local == 0.0);
    } else {
      CHECK(p.norm >= 0.01 - 1e-12);
      CHECK(p.gamma_local / p.norm == doctest::Approx(expected_gaussian_norm(6)).epsilon(0.04));
    }
  }
  CHECK(saw_zero);

  const EnsembleSpec spec{Family::Gaussian, 20, 6, std::nullopt, 26};
  SweepOptions o;
  o.trials = 100;
  const auto rep = local_check(spec, ball, probes, 2.0, 1.0, 0.05, o);
  CHECK(rep.probe_total == 31 * 100);
  CHECK(rep.max_ratio.size() == 100);
  CHECK(rep.target == doctest::Approx(std::exp(-4.0)));
  // The zero probe alone never violates, whatever the constant.
  std::vector<LocalProbe> only_zero;
  for (const auto& p : probes)
    if (p.norm == 0.0) only_zero.push_back(p);
  const auto z = local_check(spec, ball, only_zero, 1.0, 1e-12, 0.0, o);
  CHECK(z.probe_violations == 0);
  CHECK(z.pass);

  CHECK_THROWS(local_check(spec, GeoSet::sphere(6), probes, 2.0, 1.0, 0.05, o));
  CHECK_THROWS(local_probes(GeoSet::sphere(6), 10, 100, 1));
}

TEST_CASE("local probes in a star hull lie in the hull") {
  std::mt19937_64 gen(27);
  const auto star = GeoSet::star_hull(GeoSet::cloud(oracle::random_mat(gen, 25, 4)));
  const auto probes = local_probes(star, 40, 1000, 6);
  CHECK(probes.size() == 40);
  for (const auto& p : probes) CHECK(contains(star, p.x, 1e-9));
}
