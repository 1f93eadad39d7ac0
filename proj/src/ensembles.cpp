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

#include "devbound/ensembles.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "devbound/format.hpp"

namespace devbound {

namespace {

constexpr double kEigenFloor = 1e-12;

// Student t with 5 degrees of freedom, truncated at 10 standard deviations.
constexpr double kStudentDof = 5.0;
const double kStudentSd = std::sqrt(kStudentDof / (kStudentDof - 2.0));
const double kStudentCut = 10.0 * kStudentSd;

double student_kernel(double x) {
  const double base = 1.0 + x * x / kStudentDof;
  return 1.0 / (base * base * base);
}

template <class F>
double integrate(F f, double lo, double hi) {
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-13);
}

// Variance of the truncated t before rescaling.
double student_truncated_variance() {
  static const double value = [] {
    const double mass = 2.0 * integrate(student_kernel, 0.0, kStudentCut);
    const double second =
        2.0 * integrate([](double x) { return x * x * student_kernel(x); },
                        0.0, kStudentCut);
    return second / mass;
  }();
  return value;
}

// Solves E exp(X^2/K^2) = 2 given the map K -> E exp(X^2/K^2), which is
// decreasing in K.
template <class Mgf>
double solve_psi2(Mgf expected_exp, double lo, double hi) {
  auto f = [&](double k) { return expected_exp(k) - 2.0; };
  boost::math::tools::eps_tolerance<double> tol(50);
  std::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::bisect(f, lo, hi, tol, iters);
  return 0.5 * (a + b);
}

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::Gaussian:
      return "gaussian";
    case Family::Rademacher:
      return "rademacher";
    case Family::UniformScaled:
      return "uniform";
    case Family::StudentTTruncated:
      return "student";
  }
  throw std::invalid_argument("unknown family");
}

Family parse_family(std::string_view name) {
  if (name == "gaussian") return Family::Gaussian;
  if (name == "rademacher") return Family::Rademacher;
  if (name == "uniform") return Family::UniformScaled;
  if (name == "student") return Family::StudentTTruncated;
  throw std::invalid_argument("unknown family '" + std::string(name) + "'");
}

void validate(const EnsembleSpec& spec) {
  if (spec.m <= 0 || spec.n <= 0) {
    throw std::invalid_argument("ensemble dimensions must be positive");
  }
  if (!spec.covariance) return;
  const auto& sigma = *spec.covariance;
  if (sigma.rows() != spec.n || sigma.cols() != spec.n) {
    throw std::invalid_argument("covariance must be n x n");
  }
  if (!sigma.isApprox(sigma.transpose(), 1e-12)) {
    throw std::invalid_argument("covariance must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma,
                                                     Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= kEigenFloor) {
    throw std::invalid_argument("covariance must be positive definite");
  }
}

double draw_coordinate(Family family, Rng& rng) {
  switch (family) {
    case Family::Gaussian:
      return rng.normal();
    case Family::Rademacher:
      return rng.sign();
    case Family::UniformScaled:
      return std::sqrt(3.0) * (2.0 * rng.uniform() - 1.0);
    case Family::StudentTTruncated: {
      static const double scale = 1.0 / std::sqrt(student_truncated_variance());
      for (;;) {
        const double z = rng.normal();
        double chi2 = 0.0;
        for (int k = 0; k < static_cast<int>(kStudentDof); ++k) {
          const double e = rng.normal();
          chi2 += e * e;
        }
        const double t = z / std::sqrt(chi2 / kStudentDof);
        if (std::abs(t) <= kStudentCut) return t * scale;
      }
    }
  }
  throw std::invalid_argument("unknown family");
}

void fill_coordinates(Family family, Rng& rng, std::span<double> out) {
  for (double& v : out) v = draw_coordinate(family, rng);
}

MatrixSample sample_matrix(const EnsembleSpec& spec, std::uint64_t draw_index) {
  validate(spec);
  Rng rng(derive_stream(spec.seed, "matrix", draw_index));
  // Row-major fill order fixes the stream-to-entry mapping.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> a(
      spec.m, spec.n);
  fill_coordinates(spec.family, rng, std::span<double>(a.data(), a.size()));
  MatrixSample out;
  out.spec = spec;
  out.draw_index = draw_index;
  if (spec.covariance) {
    // Row i becomes sqrt(Sigma) a_i, i.e. A sqrt(Sigma) for symmetric roots.
    out.entries = a * spd_sqrt(*spec.covariance);
  } else {
    out.entries = a;
  }
  return out;
}

double scalar_psi2(Family family) {
  switch (family) {
    case Family::Gaussian:
      // E exp(g^2/K^2) = (1 - 2/K^2)^{-1/2} = 2.
      return std::sqrt(8.0 / 3.0);
    case Family::Rademacher:
      return 1.0 / std::sqrt(std::log(2.0));
    case Family::UniformScaled: {
      static const double value = solve_psi2(
          [](double k) {
            const double half = std::sqrt(3.0);
            return integrate([k](double x) { return std::exp(x * x / (k * k)); },
                             0.0, half) /
                   half;
          },
          0.5, 10.0);
      return value;
    }
    case Family::StudentTTruncated: {
      static const double value = [] {
        const double scale2 = student_truncated_variance();
        const double mass = integrate(student_kernel, 0.0, kStudentCut);
        return solve_psi2(
            [&](double k) {
              // exp overflow is not an issue here: the cut is ~12.9 and the
              // bracket keeps k >= 1.
              return integrate(
                         [&](double x) {
                           return student_kernel(x) *
                                  std::exp(x * x / (scale2 * k * k));
                         },
                         0.0, kStudentCut) /
                     mass;
            },
            1.0, 20.0);
      }();
      return value;
    }
  }
  throw std::invalid_argument("unsupported family");
}

double row_psi2_bound(const EnsembleSpec& spec) {
  const double base = scalar_psi2(spec.family);
  if (!spec.covariance) return base;
  // ||sqrt(Sigma)|| = sqrt(lambda_max(Sigma)).
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(*spec.covariance,
                                                     Eigen::EigenvaluesOnly);
  return base * std::sqrt(std::max(eig.eigenvalues().maxCoeff(), kEigenFloor));
}

Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& sigma) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
  const Eigen::VectorXd roots =
      eig.eigenvalues().cwiseMax(kEigenFloor).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() *
         eig.eigenvectors().transpose();
}

Eigen::MatrixXd spd_inv_sqrt(const Eigen::MatrixXd& sigma) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
  if (eig.eigenvalues().minCoeff() <= kEigenFloor) {
    throw std::invalid_argument("covariance is numerically singular");
  }
  const Eigen::VectorXd inv_roots = eig.eigenvalues().cwiseSqrt().cwiseInverse();
  return eig.eigenvectors() * inv_roots.asDiagonal() *
         eig.eigenvectors().transpose();
}

MatrixSample whiten(const MatrixSample& sample) {
  if (!sample.spec.covariance) {
    throw std::invalid_argument("whiten requires a covariance");
  }
  MatrixSample out;
  out.entries = sample.entries * spd_inv_sqrt(*sample.spec.covariance);
  out.spec = sample.spec;
  out.spec.covariance.reset();
  out.draw_index = sample.draw_index;
  return out;
}

void write_matrix_csv(std::ostream& os, const MatrixSample& sample) {
  const auto& a = sample.entries;
  os << "# devbound-matrix m=" << a.rows() << " n=" << a.cols()
     << " family=" << to_string(sample.spec.family)
     << " seed=" << sample.spec.seed << " draw=" << sample.draw_index << '\n';
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (j) os << ',';
      os << format_double(a(i, j));
    }
    os << '\n';
  }
}

}  // namespace devbound
