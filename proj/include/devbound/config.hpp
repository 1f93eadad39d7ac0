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
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace devbound {

/// Invalid configuration (unknown key, malformed value, seed clash).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixed constant or "calibrate:<trials>" on a seed-disjoint batch.
struct CalibrationSource {
  bool calibrate = false;
  double value = 1.0;
  std::size_t trials = 50;
};

CalibrationSource parse_calibration(std::string_view text);
std::string to_string(const CalibrationSource& c);

const std::vector<std::string>& experiment_names();

/// Text grammar: one `key = value` per line, `#` starts a comment, blank
/// lines ignored. `set` may repeat; lists are comma-separated. Relative
/// cloud files resolve against `base_dir`.
struct ExperimentConfig {
  std::string experiment;
  std::string family = "gaussian";
  long m = 100;
  long n = 0;  // 0: taken from the first set
  std::vector<std::string> sets;
  std::vector<double> u_grid{1.0, 1.5, 2.0};
  std::vector<double> lambda_grid{1.0, 2.0, 4.0, 8.0};
  std::vector<long> m_grid;
  std::size_t trials = 200;
  std::size_t samples = 10000;
  CalibrationSource c_cal;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> calibration_seed;
  double sigma = 0.1;
  double term2_weight = 1.0;
  long s = 2;
  double t = 2.0;
  std::size_t pairs = 50;
  std::size_t probes = 50;
  int starts = 16;
  double epsilon = 0.5;
  int max_iter = 2000;
  std::size_t local_trials = 0;
  std::string out = ".";
  std::string format = "csv";
  int threads = 0;  // 0: DEVBOUND_THREADS or 1
  bool assert_pass = false;
  std::filesystem::path base_dir;
};

/// Defaults for one experiment; throws ConfigError for unknown names.
ExperimentConfig defaults_for(std::string_view experiment);

/// Applies one key/value; throws ConfigError.
void apply_setting(ExperimentConfig& config, std::string_view key,
                   std::string_view value);

ExperimentConfig parse_config_text(std::string_view text,
                                   const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config_text(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& config);

/// Key/value pairs in canonical order (sets joined with " ; ").
std::vector<std::pair<std::string, std::string>> to_pairs(
    const ExperimentConfig& config);

/// Hash of the canonical text without out, threads and assert.
std::string config_hash(const ExperimentConfig& config);

/// Seed for calibration batches: explicit, or derived from the master seed.
/// Throws ConfigError when it equals the certification seed.
std::uint64_t resolved_calibration_seed(const ExperimentConfig& config);

/// Structural checks (ranges, seed disjointness, format).
void validate_config(const ExperimentConfig& config);

}  // namespace devbound
