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
#include <memory>
#include <optional>
#include <string>

namespace devbound {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Absolute tolerance on the defining functional of every set.
inline constexpr double kMembershipTol = 1e-9;

enum class SetKind {
  FiniteCloud,
  Ball2,
  Sphere,
  L1Ball,
  SparseVectors,
  Subspace,
  Scaled,
  StarHull,
  BallIntersect,
  DiffCloud,
};

/// A set T in R^n exposed through oracles. Immutable; copies share storage.
///
/// Clouds store points as rows. DiffCloud is the lazy difference set
/// {a - b : a in A, b in B} of two clouds. Radii may be infinite only for
/// SparseVectors and Subspace, where the set is then a cone usable for
/// projection but not for support queries.
class GeoSet {
 public:
  static GeoSet cloud(Mat points);
  static GeoSet singleton(const Vec& point);
  static GeoSet ball2(Eigen::Index n, double r = 1.0);
  static GeoSet sphere(Eigen::Index n, double r = 1.0);
  static GeoSet l1_ball(Eigen::Index n, double r = 1.0);
  /// s-sparse vectors of norm r (surface) or norm at most r.
  static GeoSet sparse(Eigen::Index n, Eigen::Index s, double r = 1.0,
                       bool surface = true);
  /// Span of the columns of `basis` (orthonormalized) intersected with rB.
  static GeoSet subspace(const Mat& basis, double r = 1.0);
  static GeoSet scaled(double lambda, GeoSet inner);
  static GeoSet star_hull(GeoSet inner);
  static GeoSet ball_intersect(GeoSet inner, double delta);
  static GeoSet difference(GeoSet a, GeoSet b);

  SetKind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }
  double r() const { return r_; }
  Eigen::Index s() const { return s_; }
  bool surface() const { return surface_; }
  double lambda() const { return lambda_; }
  double delta() const { return delta_; }
  /// Cloud points (rows); for DiffCloud the left operand.
  const Mat& points() const;
  const Vec& point_norms() const;
  /// DiffCloud right operand.
  const Mat& points_b() const;
  /// DiffCloud pairwise norms ||a_i - b_j||.
  const Mat& pair_norms() const;
  /// Subspace orthonormal basis (n x d).
  const Mat& basis() const;
  const GeoSet& inner() const;

  /// Descriptor-like label used in reports.
  std::string describe() const;
  GeoSet with_label(std::string label) const;

 private:
  struct Data;
  GeoSet() = default;

  SetKind kind_ = SetKind::FiniteCloud;
  Eigen::Index dim_ = 0;
  double r_ = 0.0;
  double lambda_ = 1.0;
  double delta_ = 0.0;
  Eigen::Index s_ = 0;
  bool surface_ = false;
  std::shared_ptr<const Data> data_;
  std::shared_ptr<const GeoSet> inner_;
  std::string label_;
};

struct SupportResult {
  double value = 0.0;
  Vec witness;
  bool exact = true;
};

struct SupportOptions {
  /// Use multi-start projected gradient ascent even where a closed form exists.
  bool force_heuristic = false;
  int starts = 16;
  int iterations = 500;
  std::uint64_t seed = 0;
};

/// sup_{x in T} <g, x> with a witness in T.
SupportResult support(const GeoSet& set, const Vec& g,
                      const SupportOptions& opts = {});
/// max(support(g), support(-g)).
SupportResult abs_support(const GeoSet& set, const Vec& g,
                          const SupportOptions& opts = {});

/// Support values for each row of `draws`. `exact` reports whether every
/// value came from an exact oracle.
Vec support_batch(const GeoSet& set, const Mat& draws, bool* exact = nullptr);
Vec abs_support_batch(const GeoSet& set, const Mat& draws,
                      bool* exact = nullptr);

/// Euclidean projection (nearest point). SparseVectors returns a nearest
/// s-sparse point; clouds return the nearest point by scan.
Vec project(const GeoSet& set, const Vec& p);

bool contains(const GeoSet& set, const Vec& x, double tol = kMembershipTol);

double radius(const GeoSet& set);

struct DiameterResult {
  double value = 0.0;
  bool exact = true;  // false: 2 * radius upper bound
};
DiameterResult diameter(const GeoSet& set);

bool is_star_shaped(const GeoSet& set);
bool is_symmetric(const GeoSet& set);
bool is_convex(const GeoSet& set);
bool has_projection(const GeoSet& set);

/// sup{t >= 0 : t d in T} for star-shaped T (infinite for unbounded rays).
double max_scaling(const GeoSet& set, const Vec& direction);

/// Exact equivalent of T intersected with delta B when one exists (e.g. a
/// smaller ball); std::nullopt when the intersection needs its own oracle.
/// Throws std::domain_error when the intersection is empty.
std::optional<GeoSet> simplify_intersection(const GeoSet& inner, double delta);
/// Exact equivalent of star(T) when one exists.
std::optional<GeoSet> simplify_star_hull(const GeoSet& inner);

/// Materialized X - X (or X - Y) as a deduplicated FiniteCloud.
GeoSet diff_cloud(const GeoSet& x, bool exclude_zero = false);
GeoSet diff_cloud(const GeoSet& x, const GeoSet& y, bool exclude_zero = false);

/// Euclidean projection onto the l1 ball of radius r (sort and threshold).
Vec project_l1_ball(const Vec& p, double r);

/// Exact sup of <g, x> over {||x||_1 <= r, ||x||_2 <= delta}.
SupportResult support_l1_l2(const Vec& g, double r, double delta);

}  // namespace devbound
