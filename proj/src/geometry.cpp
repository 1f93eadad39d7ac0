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

#include "devbound/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "devbound/format.hpp"
#include "devbound/rng.hpp"

namespace devbound {

struct GeoSet::Data {
  Mat points;
  Vec norms;
  Mat points_b;
  Mat pair_norms;
  Mat basis;
};

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_dim(const GeoSet& set, Eigen::Index n) {
  if (set.dim() != n) {
    throw std::invalid_argument("dimension mismatch: set has n=" +
                                std::to_string(set.dim()) + ", vector has " +
                                std::to_string(n));
  }
}

void require_positive(double value, const char* what) {
  if (!(value > 0.0)) {
    throw std::invalid_argument(std::string(what) + " must be positive");
  }
}

// Indices of the s largest |v_i|, ties broken by lowest index.
std::vector<Eigen::Index> top_magnitudes(const Vec& v, Eigen::Index s) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  const auto k = static_cast<std::ptrdiff_t>(std::min(s, v.size()));
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(),
                    [&](Eigen::Index a, Eigen::Index b) {
                      const double fa = std::abs(v[a]);
                      const double fb = std::abs(v[b]);
                      return fa > fb || (fa == fb && a < b);
                    });
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

Vec keep_entries(const Vec& v, const std::vector<Eigen::Index>& idx) {
  Vec out = Vec::Zero(v.size());
  for (auto i : idx) out[i] = v[i];
  return out;
}

Vec unit_e1(Eigen::Index n, double r) {
  Vec e = Vec::Zero(n);
  e[0] = r;
  return e;
}

SupportResult scan_rows(const Mat& points, const Vec& g) {
  const Vec values = points * g;
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return {values[best], points.row(best).transpose(), true};
}

// Dykstra's alternating projection onto the intersection of two convex sets.
template <class P1, class P2>
Vec dykstra(const Vec& p, P1 proj1, P2 proj2) {
  Vec x = p;
  Vec y1 = Vec::Zero(p.size());
  Vec y2 = Vec::Zero(p.size());
  const double scale = std::max(1.0, p.norm());
  for (int it = 0; it < 20000; ++it) {
    const Vec a = proj1(x + y1);
    y1 = x + y1 - a;
    const Vec b = proj2(a + y2);
    y2 = a + y2 - b;
    const double change = (b - x).norm();
    x = b;
    if (change <= 1e-14 * scale && (a - b).norm() <= 1e-14 * scale) break;
  }
  return x;
}

Vec clip_to_ball(const Vec& x, double delta) {
  const double nx = x.norm();
  return nx > delta ? Vec(x * (delta / nx)) : x;
}

// Exact equivalent of T intersected with delta B, when one exists.
std::optional<GeoSet> simplify_cap(const GeoSet& inner, double delta);

// Exact equivalent of star(T), when one exists.
std::optional<GeoSet> simplify_star(const GeoSet& inner) {
  switch (inner.kind()) {
    case SetKind::Sphere:
      return GeoSet::ball2(inner.dim(), inner.r());
    case SetKind::SparseVectors:
      return GeoSet::sparse(inner.dim(), inner.s(), inner.r(), false);
    case SetKind::Scaled:
      return GeoSet::scaled(inner.lambda(), GeoSet::star_hull(inner.inner()));
    default:
      break;
  }
  if (is_star_shaped(inner)) return inner;
  return std::nullopt;
}

std::optional<GeoSet> simplify_cap(const GeoSet& inner, double delta) {
  const auto empty = [] {
    return std::domain_error("intersection with the ball is empty");
  };
  switch (inner.kind()) {
    case SetKind::Ball2:
      return GeoSet::ball2(inner.dim(), std::min(inner.r(), delta));
    case SetKind::Sphere:
      if (delta + kMembershipTol < inner.r()) throw empty();
      return inner;
    case SetKind::L1Ball:
      if (delta >= inner.r()) return inner;
      return std::nullopt;
    case SetKind::SparseVectors:
      if (delta >= inner.r()) return inner;
      if (inner.surface()) throw empty();
      return GeoSet::sparse(inner.dim(), inner.s(), delta, false);
    case SetKind::Subspace:
      return GeoSet::subspace(inner.basis(), std::min(inner.r(), delta));
    case SetKind::Scaled:
      return GeoSet::scaled(
          inner.lambda(),
          GeoSet::ball_intersect(inner.inner(), delta / inner.lambda()));
    case SetKind::BallIntersect:
      return GeoSet::ball_intersect(inner.inner(),
                                    std::min(delta, inner.delta()));
    case SetKind::FiniteCloud: {
      std::vector<Eigen::Index> keep;
      for (Eigen::Index i = 0; i < inner.points().rows(); ++i) {
        if (inner.point_norms()[i] <= delta + kMembershipTol) keep.push_back(i);
      }
      if (keep.empty()) throw empty();
      if (static_cast<Eigen::Index>(keep.size()) == inner.points().rows()) {
        return inner;
      }
      Mat pts(static_cast<Eigen::Index>(keep.size()), inner.dim());
      for (std::size_t k = 0; k < keep.size(); ++k) {
        pts.row(static_cast<Eigen::Index>(k)) = inner.points().row(keep[k]);
      }
      return GeoSet::cloud(std::move(pts));
    }
    case SetKind::StarHull: {
      if (auto eq = simplify_star(inner.inner())) {
        return GeoSet::ball_intersect(*eq, delta);
      }
      return std::nullopt;
    }
    case SetKind::DiffCloud:
      return std::nullopt;
  }
  return std::nullopt;
}

bool is_cloud_like(const GeoSet& set) {
  return set.kind() == SetKind::FiniteCloud || set.kind() == SetKind::DiffCloud;
}

// Visits every element of a cloud or difference cloud as (vector, norm).
template <class F>
void for_each_element(const GeoSet& set, F&& f) {
  if (set.kind() == SetKind::FiniteCloud) {
    for (Eigen::Index i = 0; i < set.points().rows(); ++i) {
      f(Vec(set.points().row(i).transpose()), set.point_norms()[i]);
    }
    return;
  }
  const Mat& a = set.points();
  const Mat& b = set.points_b();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      f(Vec((a.row(i) - b.row(j)).transpose()), set.pair_norms()(i, j));
    }
  }
}

SupportResult support_exact(const GeoSet& set, const Vec& g,
                            const SupportOptions& opts);

SupportResult support_heuristic(const GeoSet& set, const Vec& g,
                                const SupportOptions& opts) {
  if (!has_projection(set)) {
    throw std::invalid_argument("no projection oracle for heuristic support: " +
                                set.describe());
  }
  const double gnorm = g.norm();
  const double rad = radius(set);
  SupportResult best;
  best.exact = false;
  best.value = -kInf;
  if (gnorm == 0.0) {
    best.witness = project(set, Vec::Zero(set.dim()));
    best.value = 0.0;
    return best;
  }
  const double scale = std::isfinite(rad) && rad > 0 ? rad : 1.0;
  // Geometric step growth: for a linear objective the projection of
  // x + eta g approaches the maximizer as eta grows.
  const double growth = std::pow(1e10, 1.0 / std::max(1, opts.iterations));
  for (int start = 0; start < opts.starts; ++start) {
    Rng rng(derive_stream(opts.seed, "support-start",
                          static_cast<std::uint64_t>(start)));
    Vec x(set.dim());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.normal();
    x = project(set, x * (scale / std::max(x.norm(), 1e-300)));
    double eta = scale / gnorm;
    for (int it = 0; it <= opts.iterations; ++it) {
      const double value = g.dot(x);
      if (value > best.value) {
        best.value = value;
        best.witness = x;
      }
      x = project(set, x + eta * g);
      eta *= growth;
    }
  }
  return best;
}

SupportResult support_cap(const GeoSet& set, const Vec& g,
                          const SupportOptions& opts) {
  const GeoSet& inner = set.inner();
  const double delta = set.delta();
  if (auto eq = simplify_cap(inner, delta)) return support_exact(*eq, g, opts);
  if (inner.kind() == SetKind::L1Ball) {
    return support_l1_l2(g, inner.r(), delta);
  }
  if (is_cloud_like(inner)) {
    SupportResult best{-kInf, Vec(), true};
    for_each_element(inner, [&](const Vec& p, double norm) {
      if (norm > delta + kMembershipTol) return;
      const double v = g.dot(p);
      if (v > best.value) {
        best.value = v;
        best.witness = p;
      }
    });
    if (!std::isfinite(best.value)) {
      throw std::domain_error("intersection with the ball is empty");
    }
    return best;
  }
  if (inner.kind() == SetKind::StarHull && is_cloud_like(inner.inner())) {
    // star(X) cap delta B is the union of segments [0, min(1, delta/|p|) p].
    SupportResult best{0.0, Vec::Zero(set.dim()), true};
    for_each_element(inner.inner(), [&](const Vec& p, double norm) {
      if (norm == 0.0) return;
      const double t = std::min(1.0, delta / norm);
      const double v = t * g.dot(p);
      if (v > best.value) {
        best.value = v;
        best.witness = t * p;
      }
    });
    return best;
  }
  return support_heuristic(set, g, opts);
}

SupportResult support_exact(const GeoSet& set, const Vec& g,
                            const SupportOptions& opts) {
  const Eigen::Index n = set.dim();
  switch (set.kind()) {
    case SetKind::FiniteCloud:
      return scan_rows(set.points(), g);
    case SetKind::DiffCloud: {
      const Vec va = set.points() * g;
      const Vec vb = set.points_b() * g;
      Eigen::Index ia = 0, ib = 0;
      va.maxCoeff(&ia);
      vb.minCoeff(&ib);
      return {va[ia] - vb[ib],
              (set.points().row(ia) - set.points_b().row(ib)).transpose(),
              true};
    }
    case SetKind::Ball2:
    case SetKind::Sphere: {
      const double gn = g.norm();
      if (gn == 0.0) {
        return {0.0,
                set.kind() == SetKind::Ball2 ? Vec(Vec::Zero(n))
                                             : unit_e1(n, set.r()),
                true};
      }
      return {set.r() * gn, g * (set.r() / gn), true};
    }
    case SetKind::L1Ball: {
      Eigen::Index j = 0;
      const double top = g.cwiseAbs().maxCoeff(&j);
      Vec w = Vec::Zero(n);
      if (top > 0.0) w[j] = g[j] > 0 ? set.r() : -set.r();
      return {set.r() * top, w, true};
    }
    case SetKind::SparseVectors: {
      if (!std::isfinite(set.r())) {
        throw std::domain_error("support of an unbounded sparse cone");
      }
      const Vec kept = keep_entries(g, top_magnitudes(g, set.s()));
      const double kn = kept.norm();
      if (kn == 0.0) {
        return {0.0, set.surface() ? unit_e1(n, set.r()) : Vec(Vec::Zero(n)),
                true};
      }
      return {set.r() * kn, kept * (set.r() / kn), true};
    }
    case SetKind::Subspace: {
      if (!std::isfinite(set.r())) {
        throw std::domain_error("support of an unbounded subspace");
      }
      const Vec coeff = set.basis().transpose() * g;
      const double cn = coeff.norm();
      if (cn == 0.0) return {0.0, Vec::Zero(n), true};
      return {set.r() * cn, set.basis() * coeff * (set.r() / cn), true};
    }
    case SetKind::Scaled: {
      auto res = support(set.inner(), g, opts);
      res.value *= set.lambda();
      res.witness *= set.lambda();
      return res;
    }
    case SetKind::StarHull: {
      auto res = support(set.inner(), g, opts);
      if (res.value <= 0.0) {
        res.value = 0.0;
        res.witness = Vec::Zero(n);
      }
      return res;
    }
    case SetKind::BallIntersect:
      return support_cap(set, g, opts);
  }
  throw std::logic_error("unhandled set kind");
}

}  // namespace

std::optional<GeoSet> simplify_intersection(const GeoSet& inner, double delta) {
  return simplify_cap(inner, delta);
}

std::optional<GeoSet> simplify_star_hull(const GeoSet& inner) {
  return simplify_star(inner);
}

// ---------------------------------------------------------------------------
// Construction

GeoSet GeoSet::cloud(Mat points) {
  if (points.rows() == 0 || points.cols() == 0) {
    throw std::invalid_argument("cloud must contain at least one point");
  }
  GeoSet set;
  set.kind_ = SetKind::FiniteCloud;
  set.dim_ = points.cols();
  auto data = std::make_shared<Data>();
  data->norms = points.rowwise().norm();
  data->points = std::move(points);
  set.data_ = std::move(data);
  return set;
}

GeoSet GeoSet::singleton(const Vec& point) {
  return cloud(Mat(point.transpose()));
}

GeoSet GeoSet::ball2(Eigen::Index n, double r) {
  if (n <= 0) throw std::invalid_argument("dimension must be positive");
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw std::invalid_argument("ball radius must be finite and >= 0");
  }
  GeoSet set;
  set.kind_ = SetKind::Ball2;
  set.dim_ = n;
  set.r_ = r;
  return set;
}

GeoSet GeoSet::sphere(Eigen::Index n, double r) {
  if (n <= 0) throw std::invalid_argument("dimension must be positive");
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw std::invalid_argument("sphere radius must be finite and >= 0");
  }
  GeoSet set;
  set.kind_ = SetKind::Sphere;
  set.dim_ = n;
  set.r_ = r;
  return set;
}

GeoSet GeoSet::l1_ball(Eigen::Index n, double r) {
  if (n <= 0) throw std::invalid_argument("dimension must be positive");
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw std::invalid_argument("l1 radius must be finite and >= 0");
  }
  GeoSet set;
  set.kind_ = SetKind::L1Ball;
  set.dim_ = n;
  set.r_ = r;
  return set;
}

GeoSet GeoSet::sparse(Eigen::Index n, Eigen::Index s, double r, bool surface) {
  if (n <= 0) throw std::invalid_argument("dimension must be positive");
  if (s <= 0 || s > n) throw std::invalid_argument("sparsity must be in [1, n]");
  if (!(r >= 0.0)) throw std::invalid_argument("sparse radius must be >= 0");
  GeoSet set;
  set.kind_ = SetKind::SparseVectors;
  set.dim_ = n;
  set.s_ = s;
  set.r_ = r;
  set.surface_ = surface;
  return set;
}

GeoSet GeoSet::subspace(const Mat& basis, double r) {
  if (basis.rows() == 0 || basis.cols() == 0 || basis.cols() > basis.rows()) {
    throw std::invalid_argument("subspace basis must be n x d with 1 <= d <= n");
  }
  if (!(r >= 0.0)) throw std::invalid_argument("subspace radius must be >= 0");
  Eigen::HouseholderQR<Mat> qr(basis);
  const Mat r_factor = qr.matrixQR().topRows(basis.cols()).triangularView<Eigen::Upper>();
  if (r_factor.diagonal().cwiseAbs().minCoeff() <=
      1e-12 * std::max(1.0, r_factor.diagonal().cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("subspace basis is rank deficient");
  }
  GeoSet set;
  set.kind_ = SetKind::Subspace;
  set.dim_ = basis.rows();
  set.r_ = r;
  auto data = std::make_shared<Data>();
  data->basis = qr.householderQ() * Mat::Identity(basis.rows(), basis.cols());
  set.data_ = std::move(data);
  return set;
}

GeoSet GeoSet::scaled(double lambda, GeoSet inner) {
  require_positive(lambda, "scale");
  GeoSet set;
  set.kind_ = SetKind::Scaled;
  set.dim_ = inner.dim();
  set.lambda_ = lambda;
  set.inner_ = std::make_shared<const GeoSet>(std::move(inner));
  return set;
}

GeoSet GeoSet::star_hull(GeoSet inner) {
  GeoSet set;
  set.kind_ = SetKind::StarHull;
  set.dim_ = inner.dim();
  set.inner_ = std::make_shared<const GeoSet>(std::move(inner));
  return set;
}

GeoSet GeoSet::ball_intersect(GeoSet inner, double delta) {
  if (!(delta >= 0.0)) throw std::invalid_argument("ball radius must be >= 0");
  GeoSet set;
  set.kind_ = SetKind::BallIntersect;
  set.dim_ = inner.dim();
  set.delta_ = delta;
  set.inner_ = std::make_shared<const GeoSet>(std::move(inner));
  return set;
}

GeoSet GeoSet::difference(GeoSet a, GeoSet b) {
  if (a.kind() != SetKind::FiniteCloud || b.kind() != SetKind::FiniteCloud) {
    throw std::invalid_argument("difference sets need two finite clouds");
  }
  if (a.dim() != b.dim()) throw std::invalid_argument("dimension mismatch");
  GeoSet set;
  set.kind_ = SetKind::DiffCloud;
  set.dim_ = a.dim();
  auto data = std::make_shared<Data>();
  data->points = a.points();
  data->points_b = b.points();
  data->norms = a.point_norms();
  data->pair_norms.resize(a.points().rows(), b.points().rows());
  for (Eigen::Index i = 0; i < a.points().rows(); ++i) {
    for (Eigen::Index j = 0; j < b.points().rows(); ++j) {
      data->pair_norms(i, j) = (a.points().row(i) - b.points().row(j)).norm();
    }
  }
  set.data_ = std::move(data);
  return set;
}

const Mat& GeoSet::points() const {
  if (!is_cloud_like(*this)) throw std::logic_error("set has no points");
  return data_->points;
}

const Vec& GeoSet::point_norms() const {
  if (!is_cloud_like(*this)) throw std::logic_error("set has no points");
  return data_->norms;
}

const Mat& GeoSet::points_b() const {
  if (kind_ != SetKind::DiffCloud) throw std::logic_error("not a DiffCloud");
  return data_->points_b;
}

const Mat& GeoSet::pair_norms() const {
  if (kind_ != SetKind::DiffCloud) throw std::logic_error("not a DiffCloud");
  return data_->pair_norms;
}

const Mat& GeoSet::basis() const {
  if (kind_ != SetKind::Subspace) throw std::logic_error("not a Subspace");
  return data_->basis;
}

const GeoSet& GeoSet::inner() const {
  if (!inner_) throw std::logic_error("set has no inner set");
  return *inner_;
}

GeoSet GeoSet::with_label(std::string label) const {
  GeoSet copy = *this;
  copy.label_ = std::move(label);
  return copy;
}

std::string GeoSet::describe() const {
  if (!label_.empty()) return label_;
  std::ostringstream os;
  const auto num = [](double v) { return format_double(v); };
  switch (kind_) {
    case SetKind::FiniteCloud:
      os << "cloud:size=" << data_->points.rows() << ",n=" << dim_;
      break;
    case SetKind::DiffCloud:
      os << "diff:size=" << data_->points.rows() * data_->points_b.rows()
         << ",n=" << dim_;
      break;
    case SetKind::Ball2:
      os << "ball2:r=" << num(r_) << ",n=" << dim_;
      break;
    case SetKind::Sphere:
      os << "sphere:r=" << num(r_) << ",n=" << dim_;
      break;
    case SetKind::L1Ball:
      os << "l1:r=" << num(r_) << ",n=" << dim_;
      break;
    case SetKind::SparseVectors:
      os << "sparse:s=" << s_ << ",n=" << dim_ << ",r=" << num(r_)
         << (surface_ ? ",surface" : "");
      break;
    case SetKind::Subspace:
      os << "subspace:d=" << data_->basis.cols() << ",n=" << dim_
         << ",r=" << num(r_);
      break;
    case SetKind::Scaled:
      os << "scaled(" << num(lambda_) << "," << inner_->describe() << ")";
      break;
    case SetKind::StarHull:
      os << "star(" << inner_->describe() << ")";
      break;
    case SetKind::BallIntersect:
      os << "cap(" << inner_->describe() << "," << num(delta_) << ")";
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Oracles

SupportResult support(const GeoSet& set, const Vec& g,
                      const SupportOptions& opts) {
  require_dim(set, g.size());
  if (opts.force_heuristic) return support_heuristic(set, g, opts);
  return support_exact(set, g, opts);
}

SupportResult abs_support(const GeoSet& set, const Vec& g,
                          const SupportOptions& opts) {
  auto pos = support(set, g, opts);
  auto neg = support(set, -g, opts);
  if (neg.value > pos.value) {
    // |<g, x>| for the witness x of -g.
    return {neg.value, std::move(neg.witness), pos.exact && neg.exact};
  }
  pos.exact = pos.exact && neg.exact;
  return pos;
}

Vec support_batch(const GeoSet& set, const Mat& draws, bool* exact) {
  require_dim(set, draws.cols());
  bool all_exact = true;
  Vec out(draws.rows());
  switch (set.kind()) {
    case SetKind::FiniteCloud:
      out = (draws * set.points().transpose()).rowwise().maxCoeff();
      break;
    case SetKind::DiffCloud:
      out = (draws * set.points().transpose()).rowwise().maxCoeff() -
            (draws * set.points_b().transpose()).rowwise().minCoeff();
      break;
    case SetKind::Ball2:
    case SetKind::Sphere:
      out = set.r() * draws.rowwise().norm();
      break;
    case SetKind::L1Ball:
      out = set.r() * draws.cwiseAbs().rowwise().maxCoeff();
      break;
    case SetKind::Subspace:
      if (!std::isfinite(set.r())) {
        throw std::domain_error("support of an unbounded subspace");
      }
      out = set.r() * (draws * set.basis()).rowwise().norm();
      break;
    case SetKind::Scaled:
      out = set.lambda() * support_batch(set.inner(), draws, &all_exact);
      break;
    case SetKind::StarHull:
      out = support_batch(set.inner(), draws, &all_exact).cwiseMax(0.0);
      break;
    case SetKind::BallIntersect: {
      const GeoSet& inner = set.inner();
      if (auto eq = simplify_cap(inner, set.delta())) {
        out = support_batch(*eq, draws, &all_exact);
      } else if (inner.kind() == SetKind::StarHull &&
                 inner.inner().kind() == SetKind::FiniteCloud) {
        const GeoSet& cloud = inner.inner();
        Vec factor(cloud.points().rows());
        for (Eigen::Index i = 0; i < factor.size(); ++i) {
          const double nrm = cloud.point_norms()[i];
          factor[i] = nrm == 0.0 ? 0.0 : std::min(1.0, set.delta() / nrm);
        }
        out = ((draws * cloud.points().transpose()) * factor.asDiagonal())
                  .rowwise()
                  .maxCoeff()
                  .cwiseMax(0.0);
      } else if (inner.kind() == SetKind::StarHull &&
                 inner.inner().kind() == SetKind::DiffCloud) {
        const GeoSet& dc = inner.inner();
        const Mat va = draws * dc.points().transpose();
        const Mat vb = draws * dc.points_b().transpose();
        Mat factor = dc.pair_norms();
        for (Eigen::Index i = 0; i < factor.rows(); ++i) {
          for (Eigen::Index j = 0; j < factor.cols(); ++j) {
            const double nrm = factor(i, j);
            factor(i, j) = nrm == 0.0 ? 0.0 : std::min(1.0, set.delta() / nrm);
          }
        }
        for (Eigen::Index k = 0; k < draws.rows(); ++k) {
          double best = 0.0;
          for (Eigen::Index i = 0; i < va.cols(); ++i) {
            for (Eigen::Index j = 0; j < vb.cols(); ++j) {
              best = std::max(best, factor(i, j) * (va(k, i) - vb(k, j)));
            }
          }
          out[k] = best;
        }
      } else {
        for (Eigen::Index k = 0; k < draws.rows(); ++k) {
          const auto res = support(set, draws.row(k).transpose());
          out[k] = res.value;
          all_exact = all_exact && res.exact;
        }
      }
      break;
    }
    case SetKind::SparseVectors:
      for (Eigen::Index k = 0; k < draws.rows(); ++k) {
        out[k] = support(set, draws.row(k).transpose()).value;
      }
      break;
  }
  if (exact) *exact = *exact && all_exact;
  return out;
}

Vec abs_support_batch(const GeoSet& set, const Mat& draws, bool* exact) {
  const Vec pos = support_batch(set, draws, exact);
  const Vec neg = support_batch(set, -draws, exact);
  return pos.cwiseMax(neg);
}

Vec project_l1_ball(const Vec& p, double r) {
  if (p.lpNorm<1>() <= r) return p;
  if (r <= 0.0) return Vec::Zero(p.size());
  std::vector<double> mags(p.data(), p.data() + p.size());
  for (double& v : mags) v = std::abs(v);
  std::sort(mags.begin(), mags.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < mags.size(); ++k) {
    cumsum += mags[k];
    const double candidate = (cumsum - r) / static_cast<double>(k + 1);
    if (mags[k] - candidate > 0.0) theta = candidate;
  }
  Vec out(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double shrunk = std::max(std::abs(p[i]) - theta, 0.0);
    out[i] = p[i] < 0 ? -shrunk : shrunk;
  }
  return out;
}

SupportResult support_l1_l2(const Vec& g, double r, double delta) {
  const Eigen::Index n = g.size();
  const Vec a = g.cwiseAbs();
  const double amax = a.maxCoeff();
  const auto signed_back = [&](const Vec& mags) {
    Vec x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = g[i] < 0 ? -mags[i] : mags[i];
    return x;
  };
  if (amax == 0.0 || r == 0.0 || delta == 0.0) {
    return {0.0, Vec::Zero(n), true};
  }
  if (delta >= r) {
    // The l1 ball already lies inside delta B.
    Eigen::Index j = 0;
    a.maxCoeff(&j);
    Vec w = Vec::Zero(n);
    w[j] = g[j] > 0 ? r : -r;
    return {r * amax, w, true};
  }
  const double ratio = r / delta;
  if (a.sum() <= ratio * a.norm()) {
    const Vec w = g * (delta / g.norm());
    return {g.dot(w), w, true};
  }
  // Ties at the maximum: spreading l1 mass over t maximal coordinates keeps
  // the value r * amax while the l2 norm drops to r / sqrt(t).
  Eigen::Index ties = 0;
  for (Eigen::Index i = 0; i < n; ++i) ties += a[i] == amax ? 1 : 0;
  if (ratio <= std::sqrt(static_cast<double>(ties))) {
    Vec mags = Vec::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (a[i] == amax) mags[i] = r / static_cast<double>(ties);
    }
    const Vec w = signed_back(mags);
    return {g.dot(w), w, true};
  }
  // The maximizer is proportional to soft(g, theta) with ||.||_1/||.||_2 equal
  // to r/delta. That ratio decreases in theta, and on each interval between
  // consecutive sorted magnitudes it is a ratio of a linear and the square
  // root of a quadratic, so the crossing solves a quadratic.
  std::vector<double> sorted(a.data(), a.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double c2 = ratio * ratio;
  double p1 = 0.0, p2 = 0.0;
  double theta = 0.0;
  bool found = false;
  for (std::size_t k = 1; k <= sorted.size() && !found; ++k) {
    const double ak = sorted[k - 1];
    p1 += ak;
    p2 += ak * ak;
    const double next = k < sorted.size() ? sorted[k] : 0.0;
    if (next == ak) continue;  // empty interval
    const double kd = static_cast<double>(k);
    const auto ratio_sq = [&](double th) {
      const double s1 = p1 - kd * th;
      const double s2 = p2 - 2.0 * th * p1 + kd * th * th;
      return s1 * s1 / s2;
    };
    if (ratio_sq(next) < c2) continue;
    // k (k - c2) th^2 + 2 p1 (c2 - k) th + (p1^2 - c2 p2) = 0 on [next, ak).
    const double qa = kd * (kd - c2);
    const double qb = 2.0 * p1 * (c2 - kd);
    const double qc = p1 * p1 - c2 * p2;
    double root = std::numeric_limits<double>::quiet_NaN();
    const auto in_range = [&](double th) {
      return std::isfinite(th) && th >= next && th <= ak && p1 - kd * th > 0.0;
    };
    if (std::abs(qa) > 1e-12 * std::abs(qb)) {
      const double disc = std::max(qb * qb - 4.0 * qa * qc, 0.0);
      const double sq = std::sqrt(disc);
      // Numerically stable pair of roots.
      const double q = -0.5 * (qb + std::copysign(sq, qb));
      const double r1 = q / qa;
      const double r2 = q != 0.0 ? qc / q : r1;
      if (in_range(r1)) root = r1;
      if (in_range(r2) && (!in_range(root) || std::abs(ratio_sq(r2) - c2) <
                                                  std::abs(ratio_sq(root) - c2))) {
        root = r2;
      }
    } else if (qb != 0.0) {
      root = -qc / qb;
    }
    if (!in_range(root)) {
      double lo = next, hi = ak;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (ratio_sq(mid) > c2) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      root = lo;
    }
    theta = std::clamp(root, next, ak);
    found = true;
  }
  const Vec s = (a.array() - theta).max(0.0).matrix();
  const double scale = std::min(delta / s.norm(), r / s.sum());
  const Vec w = signed_back(s * scale);
  return {g.dot(w), w, true};
}

Vec project(const GeoSet& set, const Vec& p) {
  require_dim(set, p.size());
  const Eigen::Index n = set.dim();
  switch (set.kind()) {
    case SetKind::FiniteCloud: {
      Eigen::Index best = 0;
      (set.points().rowwise() - p.transpose()).rowwise().squaredNorm().minCoeff(
          &best);
      return set.points().row(best).transpose();
    }
    case SetKind::DiffCloud: {
      Vec best;
      double best_d = kInf;
      for_each_element(set, [&](const Vec& x, double) {
        const double d = (x - p).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = x;
        }
      });
      return best;
    }
    case SetKind::Ball2:
      return clip_to_ball(p, set.r());
    case SetKind::Sphere: {
      const double pn = p.norm();
      return pn == 0.0 ? unit_e1(n, set.r()) : Vec(p * (set.r() / pn));
    }
    case SetKind::L1Ball:
      return project_l1_ball(p, set.r());
    case SetKind::SparseVectors: {
      Vec kept = keep_entries(p, top_magnitudes(p, set.s()));
      if (!std::isfinite(set.r())) return kept;
      const double kn = kept.norm();
      if (set.surface()) {
        return kn == 0.0 ? unit_e1(n, set.r()) : Vec(kept * (set.r() / kn));
      }
      return clip_to_ball(kept, set.r());
    }
    case SetKind::Subspace: {
      const Vec inside = set.basis() * (set.basis().transpose() * p);
      return std::isfinite(set.r()) ? clip_to_ball(inside, set.r()) : inside;
    }
    case SetKind::Scaled:
      return set.lambda() * project(set.inner(), p / set.lambda());
    case SetKind::StarHull:
      if (auto eq = simplify_star(set.inner())) return project(*eq, p);
      throw std::invalid_argument("projection onto a star hull is unsupported");
    case SetKind::BallIntersect: {
      const GeoSet& inner = set.inner();
      if (auto eq = simplify_cap(inner, set.delta())) return project(*eq, p);
      if (is_cloud_like(inner)) {
        Vec best;
        double best_d = kInf;
        for_each_element(inner, [&](const Vec& x, double norm) {
          if (norm > set.delta() + kMembershipTol) return;
          const double d = (x - p).squaredNorm();
          if (d < best_d) {
            best_d = d;
            best = x;
          }
        });
        if (best.size() == 0) {
          throw std::domain_error("intersection with the ball is empty");
        }
        return best;
      }
      if (is_convex(inner) && has_projection(inner)) {
        const double delta = set.delta();
        Vec x = dykstra(
            p, [&](const Vec& v) { return project(inner, v); },
            [&](const Vec& v) { return clip_to_ball(v, delta); });
        // Star-shaped inner: shrinking toward 0 stays inside.
        return clip_to_ball(project(inner, x), delta);
      }
      throw std::invalid_argument("projection unsupported for " +
                                  set.describe());
    }
  }
  throw std::logic_error("unhandled set kind");
}

bool contains(const GeoSet& set, const Vec& x, double tol) {
  require_dim(set, x.size());
  switch (set.kind()) {
    case SetKind::FiniteCloud:
      return ((set.points().rowwise() - x.transpose()).cwiseAbs().rowwise().maxCoeff())
                 .minCoeff() <= tol;
    case SetKind::DiffCloud: {
      bool found = false;
      for_each_element(set, [&](const Vec& p, double) {
        if (!found && (p - x).cwiseAbs().maxCoeff() <= tol) found = true;
      });
      return found;
    }
    case SetKind::Ball2:
      return x.norm() <= set.r() + tol;
    case SetKind::Sphere:
      return std::abs(x.norm() - set.r()) <= tol;
    case SetKind::L1Ball:
      return x.lpNorm<1>() <= set.r() + tol;
    case SetKind::SparseVectors: {
      Eigen::Index support_size = 0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        support_size += std::abs(x[i]) > tol ? 1 : 0;
      }
      if (support_size > set.s()) return false;
      if (!std::isfinite(set.r())) return true;
      return set.surface() ? std::abs(x.norm() - set.r()) <= tol
                           : x.norm() <= set.r() + tol;
    }
    case SetKind::Subspace: {
      const Vec inside = set.basis() * (set.basis().transpose() * x);
      return (inside - x).norm() <= tol && x.norm() <= set.r() + tol;
    }
    case SetKind::Scaled:
      return contains(set.inner(), x / set.lambda(), tol / set.lambda());
    case SetKind::StarHull: {
      if (x.norm() <= tol) return true;
      if (auto eq = simplify_star(set.inner())) return contains(*eq, x, tol);
      const GeoSet& inner = set.inner();
      if (is_cloud_like(inner)) {
        // x = t p for some element p and t in [0, 1].
        bool found = false;
        for_each_element(inner, [&](const Vec& p, double norm) {
          if (found || norm == 0.0) return;
          const double t = x.dot(p) / (norm * norm);
          if (t >= -tol && t <= 1.0 + tol && (x - t * p).norm() <= tol) {
            found = true;
          }
        });
        return found;
      }
      throw std::invalid_argument("membership unsupported for " +
                                  set.describe());
    }
    case SetKind::BallIntersect:
      if (x.norm() > set.delta() + tol) return false;
      return contains(set.inner(), x, tol);
  }
  throw std::logic_error("unhandled set kind");
}

double radius(const GeoSet& set) {
  switch (set.kind()) {
    case SetKind::FiniteCloud:
      return set.point_norms().maxCoeff();
    case SetKind::DiffCloud:
      return set.pair_norms().maxCoeff();
    case SetKind::Ball2:
    case SetKind::Sphere:
    case SetKind::L1Ball:
    case SetKind::SparseVectors:
    case SetKind::Subspace:
      return set.r();
    case SetKind::Scaled:
      return set.lambda() * radius(set.inner());
    case SetKind::StarHull:
      return radius(set.inner());
    case SetKind::BallIntersect: {
      const GeoSet& inner = set.inner();
      if (auto eq = simplify_cap(inner, set.delta())) {
        if (eq->kind() != SetKind::BallIntersect) return radius(*eq);
      }
      if (is_star_shaped(inner)) return std::min(set.delta(), radius(inner));
      if (is_cloud_like(inner)) {
        double best = -kInf;
        for_each_element(inner, [&](const Vec&, double norm) {
          if (norm <= set.delta() + kMembershipTol) best = std::max(best, norm);
        });
        if (!std::isfinite(best)) {
          throw std::domain_error("intersection with the ball is empty");
        }
        return best;
      }
      return std::min(set.delta(), radius(inner));
    }
  }
  throw std::logic_error("unhandled set kind");
}

DiameterResult diameter(const GeoSet& set) {
  if (set.kind() == SetKind::FiniteCloud) {
    const Mat& pts = set.points();
    double best = 0.0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < pts.rows(); ++j) {
        best = std::max(best, (pts.row(i) - pts.row(j)).norm());
      }
    }
    return {best, true};
  }
  if (set.kind() == SetKind::Scaled) {
    auto inner = diameter(set.inner());
    inner.value *= set.lambda();
    return inner;
  }
  if (set.kind() == SetKind::BallIntersect) {
    if (auto eq = simplify_cap(set.inner(), set.delta())) {
      if (eq->kind() != SetKind::BallIntersect) return diameter(*eq);
    }
  }
  return {2.0 * radius(set), is_symmetric(set)};
}

bool is_star_shaped(const GeoSet& set) {
  switch (set.kind()) {
    case SetKind::Ball2:
    case SetKind::L1Ball:
    case SetKind::Subspace:
    case SetKind::StarHull:
      return true;
    case SetKind::SparseVectors:
      return !set.surface();
    case SetKind::Scaled:
    case SetKind::BallIntersect:
      return is_star_shaped(set.inner());
    case SetKind::FiniteCloud:
      return set.point_norms().maxCoeff() == 0.0;
    case SetKind::Sphere:
      return set.r() == 0.0;
    case SetKind::DiffCloud:
      return false;
  }
  return false;
}

bool is_symmetric(const GeoSet& set) {
  switch (set.kind()) {
    case SetKind::Ball2:
    case SetKind::Sphere:
    case SetKind::L1Ball:
    case SetKind::SparseVectors:
    case SetKind::Subspace:
      return true;
    case SetKind::Scaled:
    case SetKind::StarHull:
    case SetKind::BallIntersect:
      return is_symmetric(set.inner());
    case SetKind::DiffCloud:
      return set.points().rows() == set.points_b().rows() &&
             set.points() == set.points_b();
    case SetKind::FiniteCloud: {
      for (Eigen::Index i = 0; i < set.points().rows(); ++i) {
        if (!contains(set, -set.points().row(i).transpose())) return false;
      }
      return true;
    }
  }
  return false;
}

bool is_convex(const GeoSet& set) {
  switch (set.kind()) {
    case SetKind::Ball2:
    case SetKind::L1Ball:
    case SetKind::Subspace:
      return true;
    case SetKind::Scaled:
    case SetKind::BallIntersect:
      return is_convex(set.inner());
    case SetKind::StarHull:
      if (auto eq = simplify_star(set.inner())) return is_convex(*eq);
      return false;
    case SetKind::FiniteCloud:
      return set.points().rows() == 1;
    default:
      return false;
  }
}

bool has_projection(const GeoSet& set) {
  switch (set.kind()) {
    case SetKind::StarHull:
      if (auto eq = simplify_star(set.inner())) return has_projection(*eq);
      return false;
    case SetKind::Scaled:
      return has_projection(set.inner());
    case SetKind::BallIntersect: {
      const GeoSet& inner = set.inner();
      if (auto eq = simplify_cap(inner, set.delta())) {
        if (eq->kind() != SetKind::BallIntersect) return has_projection(*eq);
      }
      return is_cloud_like(inner) ||
             (is_convex(inner) && has_projection(inner));
    }
    default:
      return true;
  }
}

double max_scaling(const GeoSet& set, const Vec& d) {
  require_dim(set, d.size());
  const double dn = d.norm();
  if (dn == 0.0) return kInf;
  switch (set.kind()) {
    case SetKind::Ball2:
      return set.r() / dn;
    case SetKind::L1Ball:
      return set.r() / d.lpNorm<1>();
    case SetKind::SparseVectors: {
      Eigen::Index nnz = 0;
      for (Eigen::Index i = 0; i < d.size(); ++i) nnz += d[i] != 0.0 ? 1 : 0;
      if (nnz > set.s()) return 0.0;
      return set.r() / dn;
    }
    case SetKind::Subspace: {
      const Vec inside = set.basis() * (set.basis().transpose() * d);
      if ((inside - d).norm() > kMembershipTol * std::max(1.0, dn)) return 0.0;
      return set.r() / dn;
    }
    case SetKind::Scaled:
      return set.lambda() * max_scaling(set.inner(), d);
    case SetKind::StarHull: {
      if (auto eq = simplify_star(set.inner())) return max_scaling(*eq, d);
      const GeoSet& inner = set.inner();
      if (!is_cloud_like(inner)) break;
      double best = 0.0;
      for_each_element(inner, [&](const Vec& p, double norm) {
        if (norm == 0.0) return;
        const double t = p.dot(d) / (dn * dn);
        if (t > 0.0 && (p - t * d).norm() <= kMembershipTol * norm) {
          best = std::max(best, t);
        }
      });
      return best;
    }
    case SetKind::BallIntersect:
      if (!is_star_shaped(set.inner())) break;
      return std::min(set.delta() / dn, max_scaling(set.inner(), d));
    default:
      break;
  }
  throw std::invalid_argument("max_scaling needs a star-shaped set: " +
                              set.describe());
}

GeoSet diff_cloud(const GeoSet& x, const GeoSet& y, bool exclude_zero) {
  if (x.kind() != SetKind::FiniteCloud || y.kind() != SetKind::FiniteCloud) {
    throw std::invalid_argument("diff_cloud needs finite clouds");
  }
  if (x.dim() != y.dim()) throw std::invalid_argument("dimension mismatch");
  const Mat& a = x.points();
  const Mat& b = y.points();
  std::vector<Vec> items;
  items.reserve(static_cast<std::size_t>(a.rows() * b.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      Vec v = (a.row(i) - b.row(j)).transpose();
      if (exclude_zero && v.cwiseAbs().maxCoeff() == 0.0) continue;
      items.push_back(std::move(v));
    }
  }
  const auto lex_less = [](const Vec& u, const Vec& v) {
    return std::lexicographical_compare(u.data(), u.data() + u.size(), v.data(),
                                        v.data() + v.size());
  };
  std::sort(items.begin(), items.end(), lex_less);
  items.erase(std::unique(items.begin(), items.end(),
                          [](const Vec& u, const Vec& v) { return u == v; }),
              items.end());
  if (items.empty()) {
    throw std::invalid_argument("difference set is empty");
  }
  Mat pts(static_cast<Eigen::Index>(items.size()), x.dim());
  for (std::size_t k = 0; k < items.size(); ++k) {
    pts.row(static_cast<Eigen::Index>(k)) = items[k].transpose();
  }
  return GeoSet::cloud(std::move(pts));
}

GeoSet diff_cloud(const GeoSet& x, bool exclude_zero) {
  return diff_cloud(x, x, exclude_zero);
}

}  // namespace devbound
