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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "devbound/set_descriptor.hpp"

using namespace devbound;

TEST_CASE("basic descriptors") {
  const auto l1 = parse_set("l1:r=1.5,n=200");
  CHECK(l1.kind() == SetKind::L1Ball);
  CHECK(l1.dim() == 200);
  CHECK(l1.r() == 1.5);
  CHECK(l1.describe() == "l1:r=1.5,n=200");

  const auto sp = parse_set("sparse:s=4,n=64,surface");
  CHECK(sp.kind() == SetKind::SparseVectors);
  CHECK(sp.s() == 4);
  CHECK(sp.surface());
  CHECK(sp.r() == 1.0);
  CHECK_FALSE(parse_set("sparse:s=4,n=64").surface());

  CHECK(parse_set(" ball2 : n = 3 ").kind() == SetKind::Ball2);
  const auto sub = parse_set("subspace:d=2,n=5,coords");
  CHECK(sub.basis() == Mat::Identity(5, 2));
  const auto rs = parse_set("subspace:d=2,n=5,seed=4");
  CHECK((rs.basis().transpose() * rs.basis() - Mat::Identity(2, 2)).norm() < 1e-12);
  CHECK(parse_set("zero:n=4").points().norm() == 0.0);
  const auto pt = parse_set("point:n=3,x=1;-2;0.5");
  CHECK(pt.points().row(0) == Eigen::RowVector3d(1, -2, 0.5));
}

TEST_CASE("combinators nest") {
  const auto s = parse_set("star(randcloud:size=5,n=3,seed=2)");
  CHECK(s.kind() == SetKind::StarHull);
  CHECK(s.inner().kind() == SetKind::FiniteCloud);
  CHECK(s.inner().points().rows() == 5);

  const auto c = parse_set("cap(star(l1:r=1,n=10), 0.25)");
  CHECK(c.kind() == SetKind::BallIntersect);
  CHECK(c.delta() == 0.25);
  CHECK(c.inner().kind() == SetKind::StarHull);

  const auto sc = parse_set("scaled(2, ball2:n=3,r=0.5)");
  CHECK(sc.kind() == SetKind::Scaled);
  CHECK(radius(sc) == doctest::Approx(1.0));

  const auto d = parse_set("diff(gausscloud:size=4,n=2,seed=1)");
  CHECK(d.kind() == SetKind::DiffCloud);
}

TEST_CASE("random clouds are reproducible") {
  const auto a = parse_set("randcloud:size=20,n=6,r=2,seed=9");
  const auto b = random_sphere_cloud(20, 6, 2.0, 9);
  CHECK(a.points() == b.points());
  CHECK((a.point_norms().array() - 2.0).abs().maxCoeff() < 1e-12);
  CHECK(parse_set("randcloud:size=20,n=6,r=2,seed=10").points() != a.points());
  const auto cl = cluster_cloud(40, 10, 2, 10.0, 0.1, 3);
  CHECK(cl.points().rows() == 40);
}

TEST_CASE("cloud files") {
  const auto dir = std::filesystem::temp_directory_path() / "devbound_sd_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "pts.csv");
    os << "# two points\n1,2,3\n\n4,5,6\n";
  }
  const auto c = parse_set("cloud:file=pts.csv", dir);
  REQUIRE(c.points().rows() == 2);
  CHECK(c.points()(1, 2) == 6.0);
  CHECK(parse_set("cloud:file=" + (dir / "pts.csv").string()).dim() == 3);

  std::istringstream ragged("1,2\n3\n");
  CHECK_THROWS_AS(read_cloud_csv(ragged), std::invalid_argument);
  std::istringstream empty("# nothing\n");
  CHECK_THROWS_AS(read_cloud_csv(empty), std::invalid_argument);
  CHECK_THROWS(parse_set("cloud:file=missing.csv", dir));
  std::filesystem::remove_all(dir);
}

TEST_CASE("bad descriptors are rejected") {
  for (const char* text :
       {"", "ball2", "ball2:r=1", "cube:n=3", "l1:n=x", "l1:n=3,,r=1",
        "sparse:s=5,n=3", "sphere:n=0", "cap(ball2:n=3)", "scaled(ball2:n=3)",
        "star(cube:n=2)", "point:n=2,x=1;2;3", "ball2:n=3,r=-1"}) {
    CAPTURE(text);
    CHECK_THROWS_AS(parse_set(text), std::invalid_argument);
  }
}
