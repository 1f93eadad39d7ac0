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

#include "devbound/set_descriptor.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "devbound/format.hpp"
#include "devbound/rng.hpp"

namespace devbound {

namespace {

std::invalid_argument bad(std::string_view descriptor, const std::string& why) {
  return std::invalid_argument("malformed set descriptor '" +
                               std::string(descriptor) + "': " + why);
}

// Splits "a,b" at the first top-level comma (outside parentheses).
std::pair<std::string_view, std::string_view> split_top(std::string_view text,
                                                        bool last) {
  int depth = 0;
  std::size_t cut = std::string_view::npos;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      cut = i;
      if (!last) break;
    }
  }
  if (cut == std::string_view::npos) return {text, {}};
  return {trim(text.substr(0, cut)), trim(text.substr(cut + 1))};
}

struct Params {
  std::map<std::string, std::string, std::less<>> values;
  std::string_view descriptor;

  bool flag(std::string_view key) const {
    auto it = values.find(key);
    return it != values.end() && it->second.empty();
  }
  bool has(std::string_view key) const { return values.count(key) != 0; }
  std::string text(std::string_view key) const {
    auto it = values.find(key);
    if (it == values.end()) throw bad(descriptor, "missing '" + std::string(key) + "'");
    return it->second;
  }
  double number(std::string_view key, std::optional<double> fallback = {}) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw bad(descriptor, "missing '" + std::string(key) + "'");
    }
    return parse_double(text(key));
  }
  Eigen::Index count(std::string_view key,
                     std::optional<Eigen::Index> fallback = {}) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw bad(descriptor, "missing '" + std::string(key) + "'");
    }
    return static_cast<Eigen::Index>(parse_int(text(key)));
  }
  std::uint64_t seed() const { return has("seed") ? parse_uint(text("seed")) : 0; }
};

Params parse_params(std::string_view descriptor, std::string_view body) {
  Params p;
  p.descriptor = descriptor;
  if (trim(body).empty()) return p;
  for (const auto& item : split(body, ',')) {
    if (item.empty()) throw bad(descriptor, "empty parameter");
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      p.values[item] = "";
    } else {
      p.values[std::string(trim(std::string_view(item).substr(0, eq)))] =
          std::string(trim(std::string_view(item).substr(eq + 1)));
    }
  }
  return p;
}

bool strip_call(std::string_view text, std::string_view name,
                std::string_view& inside) {
  if (text.size() < name.size() + 2 || text.substr(0, name.size()) != name ||
      text[name.size()] != '(' || text.back() != ')') {
    return false;
  }
  inside = trim(text.substr(name.size() + 1, text.size() - name.size() - 2));
  return true;
}

}  // namespace

Mat random_basis(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  Rng rng(derive_stream(seed, "subspace-basis", 0));
  Mat g(n, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Mat> qr(g);
  return qr.householderQ() * Mat::Identity(n, d);
}

GeoSet random_sphere_cloud(Eigen::Index size, Eigen::Index n, double r,
                           std::uint64_t seed) {
  Mat pts(size, n);
  for (Eigen::Index i = 0; i < size; ++i) {
    Rng rng(derive_stream(seed, "sphere-cloud", static_cast<std::uint64_t>(i)));
    for (Eigen::Index j = 0; j < n; ++j) pts(i, j) = rng.normal();
    pts.row(i) *= r / pts.row(i).norm();
  }
  return GeoSet::cloud(std::move(pts));
}

GeoSet gaussian_cloud(Eigen::Index size, Eigen::Index n, double scale,
                      std::uint64_t seed) {
  Mat pts(size, n);
  for (Eigen::Index i = 0; i < size; ++i) {
    Rng rng(derive_stream(seed, "gaussian-cloud", static_cast<std::uint64_t>(i)));
    for (Eigen::Index j = 0; j < n; ++j) pts(i, j) = scale * rng.normal();
  }
  return GeoSet::cloud(std::move(pts));
}

GeoSet cluster_cloud(Eigen::Index size, Eigen::Index n, Eigen::Index k,
                     double sep, double spread, std::uint64_t seed) {
  if (k <= 0 || size < k) throw std::invalid_argument("need 1 <= k <= size");
  const double root_n = std::sqrt(static_cast<double>(n));
  Mat centres(k, n);
  for (Eigen::Index c = 0; c < k; ++c) {
    Rng rng(derive_stream(seed, "cluster-centre", static_cast<std::uint64_t>(c)));
    for (Eigen::Index j = 0; j < n; ++j) centres(c, j) = sep / root_n * rng.normal();
  }
  Mat pts(size, n);
  for (Eigen::Index i = 0; i < size; ++i) {
    Rng rng(derive_stream(seed, "cluster-member", static_cast<std::uint64_t>(i)));
    const Eigen::Index c = i % k;
    for (Eigen::Index j = 0; j < n; ++j) {
      pts(i, j) = centres(c, j) + spread / root_n * rng.normal();
    }
  }
  return GeoSet::cloud(std::move(pts));
}

GeoSet read_cloud_csv(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::vector<double> row;
    for (const auto& cell : split(t, ',')) row.push_back(parse_double(cell));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::invalid_argument("cloud CSV rows have different lengths");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("cloud CSV is empty");
  Mat pts(static_cast<Eigen::Index>(rows.size()),
          static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      pts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return GeoSet::cloud(std::move(pts));
}

GeoSet read_cloud_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open cloud file " + path.string());
  return read_cloud_csv(in);
}

GeoSet parse_set(std::string_view descriptor,
                 const std::filesystem::path& base_dir) {
  const std::string_view text = trim(descriptor);
  std::string_view inside;
  if (strip_call(text, "star", inside)) {
    return GeoSet::star_hull(parse_set(inside, base_dir))
        .with_label(std::string(text));
  }
  if (strip_call(text, "diff", inside)) {
    GeoSet x = parse_set(inside, base_dir);
    return GeoSet::difference(x, x).with_label(std::string(text));
  }
  if (strip_call(text, "scaled", inside)) {
    const auto [num, rest] = split_top(inside, false);
    if (rest.empty()) throw bad(text, "scaled(lambda, set)");
    return GeoSet::scaled(parse_double(num), parse_set(rest, base_dir))
        .with_label(std::string(text));
  }
  if (strip_call(text, "cap", inside)) {
    const auto [set_text, num] = split_top(inside, true);
    if (num.empty()) throw bad(text, "cap(set, delta)");
    return GeoSet::ball_intersect(parse_set(set_text, base_dir),
                                  parse_double(num))
        .with_label(std::string(text));
  }
  const auto colon = text.find(':');
  const std::string_view name =
      trim(colon == std::string_view::npos ? text : text.substr(0, colon));
  const Params p = parse_params(
      text, colon == std::string_view::npos ? std::string_view{}
                                            : text.substr(colon + 1));
  const std::string label(text);
  try {
    if (name == "ball2") {
      return GeoSet::ball2(p.count("n"), p.number("r", 1.0)).with_label(label);
    }
    if (name == "sphere") {
      return GeoSet::sphere(p.count("n"), p.number("r", 1.0)).with_label(label);
    }
    if (name == "l1") {
      return GeoSet::l1_ball(p.count("n"), p.number("r", 1.0)).with_label(label);
    }
    if (name == "sparse") {
      return GeoSet::sparse(p.count("n"), p.count("s"), p.number("r", 1.0),
                            p.flag("surface"))
          .with_label(label);
    }
    if (name == "subspace") {
      const auto n = p.count("n");
      const auto d = p.count("d");
      Mat basis = p.flag("coords") ? Mat(Mat::Identity(n, d))
                                   : random_basis(n, d, p.seed());
      return GeoSet::subspace(basis, p.number("r", 1.0)).with_label(label);
    }
    if (name == "cloud") {
      std::filesystem::path file = p.text("file");
      if (file.is_relative() && !base_dir.empty()) file = base_dir / file;
      return read_cloud_csv(file).with_label(label);
    }
    if (name == "randcloud") {
      return random_sphere_cloud(p.count("size"), p.count("n"),
                                 p.number("r", 1.0), p.seed())
          .with_label(label);
    }
    if (name == "gausscloud") {
      return gaussian_cloud(p.count("size"), p.count("n"),
                            p.number("scale", 1.0), p.seed())
          .with_label(label);
    }
    if (name == "clusters") {
      return cluster_cloud(p.count("size"), p.count("n"), p.count("k", 2),
                           p.number("sep", 10.0), p.number("spread", 0.1),
                           p.seed())
          .with_label(label);
    }
    if (name == "point") {
      const auto coords = split(p.text("x"), ';');
      Vec x(static_cast<Eigen::Index>(coords.size()));
      for (std::size_t i = 0; i < coords.size(); ++i) {
        x[static_cast<Eigen::Index>(i)] = parse_double(coords[i]);
      }
      if (p.has("n") && p.count("n") != x.size()) {
        throw bad(text, "point length differs from n");
      }
      return GeoSet::singleton(x).with_label(label);
    }
    if (name == "zero") {
      return GeoSet::singleton(Vec::Zero(p.count("n"))).with_label(label);
    }
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    if (what.rfind("malformed set descriptor", 0) == 0) throw;
    throw bad(text, what);
  }
  throw bad(text, "unknown set kind '" + std::string(name) + "'");
}

}  // namespace devbound
