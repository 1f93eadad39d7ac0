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

// devbound command-line driver.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "devbound/config.hpp"
#include "devbound/experiments.hpp"
#include "devbound/format.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitCertification = 3;

struct Flags {
  std::map<std::string, std::string> values;
  std::vector<std::string> sets;
  std::string config_path;
  bool assert_pass = false;
};

void add_flags(CLI::App* app, Flags& f) {
  const auto opt = [&](const std::string& name, const std::string& key,
                       const std::string& help) {
    app->add_option_function<std::string>(
        name, [&f, key](const std::string& v) { f.values[key] = v; }, help);
  };
  app->add_option("--set", f.sets, "Set descriptor (repeatable)");
  app->add_option("--config", f.config_path, "key = value config file");
  opt("--family", "family", "gaussian | rademacher | uniform | student");
  opt("--m", "m", "Rows of A");
  opt("--n", "n", "Ambient dimension");
  opt("--trials", "trials", "Matrix draws");
  opt("--samples", "samples", "Gaussian samples for width estimates");
  opt("--seed", "seed", "Master seed");
  opt("--calibration-seed", "calibration_seed", "Seed for calibration batches");
  opt("--c-cal", "c_cal", "Fixed constant or calibrate:<trials>");
  app->add_option_function<std::string>(
      "--calibrate", [&f](const std::string& v) { f.values["c_cal"] = "calibrate:" + v; },
      "Calibrate the constant on this many seed-disjoint trials");
  opt("--u", "u_grid", "Tail grid, e.g. 1,1.5,2");
  opt("--lambda", "lambda_grid", "Scaling grid, e.g. 1,2,4,8");
  opt("--m-grid", "m_grid", "Measurement grid, e.g. 2..15 or 10,20,40");
  opt("--sigma", "sigma", "Noise level");
  opt("--term2-weight", "term2_weight", "Second-term weight in model selection");
  opt("--s", "s", "Sparsity");
  opt("--t", "t", "Local deviation level");
  opt("--pairs", "pairs", "Random unit pairs");
  opt("--probes", "probes", "Local probes");
  opt("--starts", "starts", "Random starts for heuristic searches");
  opt("--epsilon", "epsilon", "JL distortion tolerance");
  opt("--max-iter", "max_iter", "Solver iterations");
  opt("--local-trials", "local_trials", "JL local-versus-global trials");
  opt("--out", "out", "Output directory");
  opt("--format", "format", "csv | json");
  opt("--threads", "threads", "Worker threads (default DEVBOUND_THREADS or 1)");
  app->add_flag("--assert", f.assert_pass, "Exit 3 when certification fails");
}

int execute(const std::string& experiment, const Flags& f) {
  devbound::ExperimentConfig config;
  if (!f.config_path.empty()) {
    config = devbound::load_config(f.config_path);
    if (!experiment.empty() && config.experiment != experiment) {
      throw devbound::ConfigError("config is for '" + config.experiment +
                                  "', not '" + experiment + "'");
    }
  } else {
    if (experiment.empty()) throw devbound::ConfigError("no experiment given");
    config = devbound::defaults_for(experiment);
  }
  if (!f.sets.empty()) {
    config.sets.clear();
    for (const auto& s : f.sets) devbound::apply_setting(config, "set", s);
  }
  for (const auto& [k, v] : f.values) devbound::apply_setting(config, k, v);
  if (f.assert_pass) config.assert_pass = true;

  const devbound::RunSummary sum = devbound::run(config);
  std::cout << sum.experiment << ": " << (sum.certified ? "certified" : "not certified")
            << ", violations=" << sum.violations;
  if (sum.c_cal) std::cout << ", c_cal=" << devbound::format_double(*sum.c_cal);
  std::cout << ", config_hash=" << sum.config_hash << '\n';
  for (const auto& a : sum.artifacts) std::cout << "  " << a << '\n';
  return (config.assert_pass && !sum.certified) ? kExitCertification : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"devbound: matrix deviation experiments"};
  app.require_subcommand(0, 1);
  Flags top;
  app.add_option("--config", top.config_path, "Run the experiment named in a config file");
  app.add_flag("--assert", top.assert_pass, "Exit 3 when certification fails");

  std::map<std::string, Flags> flags;
  for (const auto& name : devbound::experiment_names()) {
    CLI::App* sub = app.add_subcommand(name, "Run the " + name + " experiment");
    add_flags(sub, flags[name]);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  try {
    for (auto& [name, f] : flags) {
      if (app.got_subcommand(name)) return execute(name, f);
    }
    if (top.config_path.empty()) {
      std::cerr << app.help();
      return kExitConfig;
    }
    return execute("", top);
  } catch (const devbound::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
