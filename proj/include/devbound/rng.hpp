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
#include <string_view>

namespace devbound {

/// SplitMix64 finalizer. Bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t x);

/// FNV-1a over the bytes of `text`.
std::uint64_t hash_string(std::string_view text);

/// Derives an independent stream key from a master seed, a purpose tag and an
/// index. Streams for distinct (purpose, index) never depend on call order or
/// on how many other streams were derived, so adding experiments does not
/// perturb existing ones.
std::uint64_t derive_stream(std::uint64_t seed, std::string_view purpose,
                            std::uint64_t index);

/// xoshiro256** generator with portable floating-point transforms.
///
/// The standard <random> distributions are implementation-defined, so the
/// uniform and normal transforms are written out here to keep sampled values
/// bit-identical across standard libraries.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t key);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_pos();
  /// Standard normal (Box-Muller, pairs cached).
  double normal();
  /// +1 or -1 with equal probability.
  double sign();
  /// Uniform integer on [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace devbound
