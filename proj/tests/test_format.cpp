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

#include <cmath>
#include <limits>
#include <random>

#include "devbound/format.hpp"

using namespace devbound;

TEST_CASE("doubles print with 17 significant digits and round-trip") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5) == "-2.5");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(format_double(std::nan("")) == "nan");
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(gen) * std::pow(10.0, static_cast<int>(gen() % 40) - 20);
    CHECK(parse_double(format_double(x)) == x);
  }
}

TEST_CASE("parsing rejects junk") {
  CHECK(parse_double(" 2.5 ") == 2.5);
  CHECK(std::isinf(parse_double("inf")));
  CHECK_THROWS_AS(parse_double("2.5x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_double(""), std::invalid_argument);
  CHECK(parse_int("-4") == -4);
  CHECK_THROWS_AS(parse_uint("-4"), std::invalid_argument);
  CHECK(parse_uint("18446744073709551615") == 18446744073709551615ULL);
}

TEST_CASE("splitting and lists") {
  const auto parts = split("a,b,,c", ',');
  REQUIRE(parts.size() == 4);
  CHECK(parts[2].empty());
  CHECK(trim("  x y \t") == "x y");
  const auto v = parse_double_list("1, 2,4,8");
  REQUIRE(v.size() == 4);
  CHECK(v[3] == 8.0);
  CHECK(hex64(255) == "00000000000000ff");
}
