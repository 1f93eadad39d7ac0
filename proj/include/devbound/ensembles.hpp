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

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "devbound/rng.hpp"

namespace devbound {

/// Coordinate distribution of the matrix entries. Every family has mean 0 and
/// variance 1, so rows with identity covariance are isotropic.
enum class Family { Gaussian, Rademacher, UniformScaled, StudentTTruncated };

std::string_view to_string(Family family);
Family parse_family(std::string_view name);

struct EnsembleSpec {
  Family family = Family::Gaussian;
  Eigen::Index m = 1;
  Eigen::Index n = 1;
  /// Row covariance; absent means isotropic.
  std::optional<Eigen::MatrixXd> covariance;
  std::uint64_t seed = 0;
};

struct MatrixSample {
  Eigen::MatrixXd entries;
  EnsembleSpec spec;
  std::uint64_t draw_index = 0;
};

/// Throws std::invalid_argument on zero dimensions or a covariance that is
/// not n x n symmetric positive definite.
void validate(const EnsembleSpec& spec);

/// One unit-variance coordinate.
double draw_coordinate(Family family, Rng& rng);
void fill_coordinates(Family family, Rng& rng, std::span<double> out);

/// Draws the matrix for trial `draw_index`. The entries depend only on
/// (spec, draw_index). With a covariance each row is sqrt(Sigma) times an
/// isotropic row.
MatrixSample sample_matrix(const EnsembleSpec& spec, std::uint64_t draw_index);

/// Exact psi_2 norm of one coordinate: inf{K : E exp(X^2/K^2) <= 2}.
double scalar_psi2(Family family);

/// K reported for a row: scalar_psi2 times ||sqrt(Sigma)||. The vector norm
/// of an independent-coordinate row is within an absolute constant of this.
double row_psi2_bound(const EnsembleSpec& spec);

/// Rows multiplied by sqrt(Sigma)^{-1}; the result is marked isotropic.
MatrixSample whiten(const MatrixSample& sample);

/// Symmetric square root and inverse square root via eigendecomposition.
/// Eigenvalues below 1e-12 are floored (sqrt) or rejected (inverse sqrt).
Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& sigma);
Eigen::MatrixXd spd_inv_sqrt(const Eigen::MatrixXd& sigma);

/// CSV dump with a `# devbound-matrix ...` header line.
void write_matrix_csv(std::ostream& os, const MatrixSample& sample);

}  // namespace devbound
