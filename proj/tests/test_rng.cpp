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

#include <set>
#include <vector>

#include "devbound/rng.hpp"

using namespace devbound;

TEST_CASE("streams are pure functions of their key") {
  CHECK(derive_stream(1, "matrix", 3) == derive_stream(1, "matrix", 3));
  std::set<std::uint64_t> keys;
  for (std::uint64_t seed : {0ULL, 1ULL, 2ULL}) {
    for (const char* purpose : {"matrix", "gaussian", "noise"}) {
      for (std::uint64_t i = 0; i < 50; ++i) keys.insert(derive_stream(seed, purpose, i));
    }
  }
  CHECK(keys.size() == 3u * 3u * 50u);

  Rng a(derive_stream(5, "x", 0)), b(derive_stream(5, "x", 0));
  for (int i = 0; i < 100; ++i) CHECK(a() == b());
}

TEST_CASE("hash_string is FNV-1a") {
  CHECK(hash_string("") == 0xcbf29ce484222325ULL);
  CHECK(hash_string("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("uniform draws stay in range with the right moments") {
  Rng rng(42);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double v = rng.uniform_pos();
    REQUIRE(v > 0.0);
    REQUIRE(v <= 1.0);
    sum += u;
  }
  CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("normal draws have mean 0, variance 1 and Gaussian fourth moment") {
  Rng rng(7);
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0, s4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s1 += x;
    s2 += x * x;
    s4 += x * x * x * x;
  }
  CHECK(std::abs(s1 / n) < 0.01);
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(s4 / n == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("signs and bounded integers are balanced") {
  Rng rng(11);
  double total = 0.0;
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const double s = rng.sign();
    REQUIRE((s == 1.0 || s == -1.0));
    total += s;
    const auto k = rng.below(7);
    REQUIRE(k < 7u);
    ++counts[k];
  }
  CHECK(std::abs(total) / 70000 < 0.02);
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}
