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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "devbound/geometry.hpp"

namespace devbound {

/// Parses a set descriptor. Grammar:
///
///   set    := name ':' params
///           | 'star(' set ')'
///           | 'scaled(' number ',' set ')'
///           | 'cap(' set ',' number ')'
///           | 'diff(' set ')'            (lazy X - X of a cloud)
///   params := item (',' item)*,  item := key '=' value | flag
///
/// Names: ball2, sphere, l1 (r, n); sparse (s, n, r, flag surface);
/// subspace (d, n, r, seed; flag coords for the first d axes);
/// cloud (file=path.csv); randcloud (size, n, r, seed: uniform on the sphere
/// of radius r); gausscloud (size, n, seed, scale); clusters (size, n, k,
/// sep, spread, seed); point (n, x=a;b;...); zero (n).
///
/// Relative cloud paths resolve against `base_dir`.
GeoSet parse_set(std::string_view descriptor,
                 const std::filesystem::path& base_dir = {});

/// One point per row, n comma-separated columns, no header. Blank lines and
/// lines starting with '#' are skipped.
GeoSet read_cloud_csv(std::istream& is);
GeoSet read_cloud_csv(const std::filesystem::path& path);

/// Random clouds used by descriptors and experiments.
GeoSet random_sphere_cloud(Eigen::Index size, Eigen::Index n, double r,
                           std::uint64_t seed);
GeoSet gaussian_cloud(Eigen::Index size, Eigen::Index n, double scale,
                      std::uint64_t seed);
/// `k` tight clusters: centres are Gaussian with per-coordinate scale
/// sep/sqrt(n), members add Gaussian noise of scale spread/sqrt(n).
GeoSet cluster_cloud(Eigen::Index size, Eigen::Index n, Eigen::Index k,
                     double sep, double spread, std::uint64_t seed);
/// Orthonormal n x d basis from a seeded Gaussian matrix.
Mat random_basis(Eigen::Index n, Eigen::Index d, std::uint64_t seed);

}  // namespace devbound
