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

#include <stdexcept>

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "devbound/ensembles.hpp"
#include "oracles.hpp"

using namespace devbound;

namespace {

Eigen::MatrixXd row_covariance(const Eigen::MatrixXd& a) {
  return a.transpose() * a / static_cast<double>(a.rows());
}

Eigen::MatrixXd diag41() {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2, 2);
  s(0, 0) = 4.0;
  s(1, 1) = 1.0;
  return s;
}

// psi_2 norm of a symmetric density on [-b, b] by Simpson + bisection.
double psi2_by_quadrature(const std::function<double(double)>& density, double b) {
  const double mass = oracle::simpson(density, -b, b);
  return oracle::bisect_increasing(
      [&](double k) {
        // E exp(X^2/K^2) is decreasing in K; negate for an increasing root.
        const double e = oracle::simpson(
            [&](double x) { return density(x) * std::exp(x * x / (k * k)); }, -b, b);
        return 2.0 - e / mass;
      },
      0.3, 20.0, 80);
}

}  // namespace

TEST_CASE("same draw index gives the same matrix") {
  const EnsembleSpec spec{Family::Gaussian, 2, 2, std::nullopt, 17};
  const auto a = sample_matrix(spec, 3);
  const auto b = sample_matrix(spec, 3);
  CHECK(a.entries == b.entries);
  CHECK(a.draw_index == 3);
  CHECK(sample_matrix(spec, 4).entries != a.entries);
  EnsembleSpec other = spec;
  other.seed = 18;
  CHECK(sample_matrix(other, 3).entries != a.entries);
}

TEST_CASE("Rademacher entries square to one") {
  const EnsembleSpec spec{Family::Rademacher, 1000, 1, std::nullopt, 2};
  const auto a = sample_matrix(spec, 0);
  CHECK(a.entries.squaredNorm() / 1000.0 == doctest::Approx(1.0));
  CHECK(a.entries.cwiseAbs().minCoeff() == 1.0);
}

TEST_CASE("every family is centred with unit variance and isotropic rows") {
  for (Family f : {Family::Gaussian, Family::Rademacher, Family::UniformScaled,
                   Family::StudentTTruncated}) {
    CAPTURE(to_string(f));
    const EnsembleSpec spec{f, 100000, 3, std::nullopt, 5};
    const auto a = sample_matrix(spec, 0);
    const Eigen::MatrixXd cov = row_covariance(a.entries);
    CHECK((cov - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 0.03);
    CHECK(std::abs(a.entries.mean()) < 0.01);
  }
}

TEST_CASE("covariance is imposed through sqrt(Sigma)") {
  EnsembleSpec spec{Family::Gaussian, 10000, 2, diag41(), 9};
  const auto a = sample_matrix(spec, 0);
  const Eigen::MatrixXd cov = row_covariance(a.entries);
  CHECK(cov(0, 0) == doctest::Approx(4.0).epsilon(0.05));
  CHECK(cov(1, 1) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(std::abs(cov(0, 1)) < 0.05);

  const auto w = whiten(a);
  CHECK_FALSE(w.spec.covariance.has_value());
  const Eigen::MatrixXd wc = row_covariance(w.entries);
  CHECK((wc - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("whitening examples") {
  MatrixSample s;
  s.entries = Eigen::MatrixXd(1, 2);
  s.entries << 2.0, 3.0;
  s.spec = EnsembleSpec{Family::Gaussian, 1, 2, diag41(), 0};
  const auto w = whiten(s);
  CHECK(w.entries(0, 0) == doctest::Approx(1.0));
  CHECK(w.entries(0, 1) == doctest::Approx(3.0));

  MatrixSample id = s;
  id.spec.covariance = Eigen::MatrixXd::Identity(2, 2);
  CHECK(whiten(id).entries.isApprox(s.entries, 1e-14));

  MatrixSample none = s;
  none.spec.covariance.reset();
  CHECK_THROWS_AS(whiten(none), std::invalid_argument);
  MatrixSample singular = s;
  singular.spec.covariance = Eigen::MatrixXd::Zero(2, 2);
  CHECK_THROWS(whiten(singular));
}

TEST_CASE("closed-form psi_2 norms") {
  CHECK(scalar_psi2(Family::Gaussian) == doctest::Approx(std::sqrt(8.0 / 3.0)).epsilon(1e-12));
  CHECK(scalar_psi2(Family::Rademacher) ==
        doctest::Approx(1.0 / std::sqrt(std::log(2.0))).epsilon(1e-12));
}

TEST_CASE("quadrature psi_2 norms agree with an independent Simpson oracle") {
  const double b = std::sqrt(3.0);
  const double uniform = psi2_by_quadrature([](double) { return 1.0; }, b);
  CHECK(scalar_psi2(Family::UniformScaled) == doctest::Approx(uniform).epsilon(1e-6));
  CHECK(scalar_psi2(Family::UniformScaled) == doctest::Approx(1.33836915543091105).epsilon(1e-8));

  // Student t with 5 degrees of freedom, truncated at +-10 standard deviations
  // (sd = sqrt(5/3)) and rescaled to unit variance.
  const double nu = 5.0, sd = std::sqrt(nu / (nu - 2.0)), cut = 10.0 * sd;
  const auto t_density = [&](double x) { return std::pow(1.0 + x * x / nu, -(nu + 1.0) / 2.0); };
  const double mass = oracle::simpson(t_density, -cut, cut, 200000);
  const double var =
      oracle::simpson([&](double x) { return x * x * t_density(x); }, -cut, cut, 200000) / mass;
  const double scale = std::sqrt(var);
  const double student = psi2_by_quadrature(
      [&](double y) { return t_density(y * scale); }, cut / scale);
  CHECK(scalar_psi2(Family::StudentTTruncated) == doctest::Approx(student).epsilon(1e-5));
  CHECK(scalar_psi2(Family::StudentTTruncated) ==
        doctest::Approx(3.05985883259043129).epsilon(1e-6));
}

TEST_CASE("row psi_2 bound scales with the covariance") {
  EnsembleSpec iso{Family::Gaussian, 3, 2, std::nullopt, 0};
  CHECK(row_psi2_bound(iso) == scalar_psi2(Family::Gaussian));
  iso.family = Family::Rademacher;
  CHECK(row_psi2_bound(iso) == doctest::Approx(1.0 / std::sqrt(std::log(2.0))));
  EnsembleSpec aniso{Family::Gaussian, 3, 2, diag41(), 0};
  CHECK(row_psi2_bound(aniso) == doctest::Approx(2.0 * std::sqrt(8.0 / 3.0)).epsilon(1e-10));
}

TEST_CASE("invalid specs are rejected") {
  CHECK_THROWS_AS(validate(EnsembleSpec{Family::Gaussian, 0, 2, std::nullopt, 0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate(EnsembleSpec{Family::Gaussian, 2, 0, std::nullopt, 0}),
                  std::invalid_argument);
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;  // indefinite
  CHECK_THROWS_AS(validate(EnsembleSpec{Family::Gaussian, 2, 2, bad, 0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate(EnsembleSpec{Family::Gaussian, 2, 3, diag41(), 0}),
                  std::invalid_argument);
  CHECK_THROWS(parse_family("cauchy"));
  CHECK(parse_family("student") == Family::StudentTTruncated);
}

TEST_CASE("matrix CSV dump") {
  const EnsembleSpec spec{Family::Rademacher, 2, 3, std::nullopt, 4};
  std::ostringstream os;
  write_matrix_csv(os, sample_matrix(spec, 6));
  const std::string text = os.str();
  CHECK(text.rfind("# devbound-matrix m=2 n=3 family=rademacher seed=4 draw=6\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}
