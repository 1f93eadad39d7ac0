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

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "devbound/config.hpp"

namespace devbound {

struct RunSummary {
  std::string experiment;
  std::string config_hash;
  double wall_time_s = 0.0;
  nlohmann::ordered_json aggregates;
  std::size_t violations = 0;
  bool certified = true;
  std::optional<double> c_cal;
  std::vector<std::string> artifacts;
};

/// Runs the configured experiment, writes `<out>/<experiment>.csv` (plus
/// auxiliary tables) and `<out>/<experiment>.summary.json`.
RunSummary run(const ExperimentConfig& config);

/// The experiment's constant: the fixed value, or the calibration statistic
/// over a batch drawn from the calibration seed.
double calibrate(const ExperimentConfig& config);

}  // namespace devbound
