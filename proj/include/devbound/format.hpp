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
#include <string>
#include <string_view>
#include <vector>

namespace devbound {

/// Locale-independent rendering with 17
/// significant digits. Non-finite values print as inf, -inf or nan.
std::string format_double(double value);

/// Parses a double with the C locale rules; throws std::invalid_argument.
double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);
std::uint64_t parse_uint(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

/// Comma-separated list of doubles, e.g. "1,2,4,8".
std::vector<double> parse_double_list(std::string_view text);

std::string hex64(std::uint64_t value);

}  // namespace devbound
