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

#include "devbound/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "devbound/format.hpp"
#include "devbound/rng.hpp"

namespace devbound {

namespace {

template <class F>
auto guarded(std::string_view key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("bad value for '" + std::string(key) + "': " + e.what());
  }
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

std::string join_longs(const std::vector<long>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

// "2..15" expands to every integer in range; otherwise a comma list.
std::vector<long> parse_long_list(std::string_view text) {
  std::vector<long> out;
  for (const auto& item : split(text, ',')) {
    const auto t = trim(item);
    const auto dots = t.find("..");
    if (dots != std::string_view::npos) {
      const long lo = static_cast<long>(parse_int(t.substr(0, dots)));
      const long hi = static_cast<long>(parse_int(t.substr(dots + 2)));
      if (hi < lo) throw std::invalid_argument("empty range");
      for (long v = lo; v <= hi; ++v) out.push_back(v);
    } else {
      out.push_back(static_cast<long>(parse_int(t)));
    }
  }
  return out;
}

bool parse_bool(std::string_view text) {
  if (text == "1" || text == "true" || text == "yes") return true;
  if (text == "0" || text == "false" || text == "no") return false;
  throw std::invalid_argument("expected true or false");
}

}  // namespace

CalibrationSource parse_calibration(std::string_view text) {
  CalibrationSource c;
  const auto t = trim(text);
  constexpr std::string_view prefix = "calibrate:";
  try {
    if (t.substr(0, prefix.size()) == prefix) {
      c.calibrate = true;
      c.trials = static_cast<std::size_t>(parse_uint(t.substr(prefix.size())));
    } else {
      c.value = parse_double(t);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("c_cal: ") + e.what());
  }
  if (c.calibrate) {
    if (c.trials < 30) throw ConfigError("calibration needs at least 30 trials");
    return c;
  }
  if (!(c.value > 0.0)) throw ConfigError("c_cal must be positive");
  return c;
}

std::string to_string(const CalibrationSource& c) {
  return c.calibrate ? "calibrate:" + std::to_string(c.trials)
                     : format_double(c.value);
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{
      "width",  "gamma", "increments", "deviate", "tail",   "local",  "singvals",
      "jl",     "escape", "mstar",     "image",   "recover", "select", "phase"};
  return names;
}

ExperimentConfig defaults_for(std::string_view experiment) {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), experiment) == names.end()) {
    throw ConfigError("unknown experiment '" + std::string(experiment) + "'");
  }
  ExperimentConfig c;
  c.experiment = std::string(experiment);
  const auto fixed = [](double v) {
    CalibrationSource s;
    s.value = v;
    return s;
  };
  const auto calibrated = [](std::size_t trials) {
    CalibrationSource s;
    s.calibrate = true;
    s.trials = trials;
    return s;
  };
  c.c_cal = fixed(1.0);
  if (experiment == "width" || experiment == "gamma") {
    c.sets = {"ball2:r=1,n=50"};
  } else if (experiment == "increments") {
    c.m = 50;
    c.n = 20;
    c.trials = 1000;
  } else if (experiment == "deviate") {
    c.c_cal = calibrated(50);
  } else if (experiment == "tail") {
    c.trials = 2000;
    c.c_cal = calibrated(200);
  } else if (experiment == "local") {
    c.sets = {"ball2:r=1,n=20"};
    c.trials = 500;
    c.samples = 2000;
    c.c_cal = calibrated(100);
  } else if (experiment == "singvals") {
    c.m = 400;
    c.n = 25;
    c.trials = 100;
    c.c_cal = fixed(2.0);
  } else if (experiment == "jl") {
    c.sets = {"randcloud:size=100,n=1000,r=1"};
    c.m = 128;
    c.trials = 100;
    c.samples = 1000;
  } else if (experiment == "escape") {
    c.sets = {"sparse:s=2,n=20,r=1,surface"};
    c.m_grid = parse_long_list("2..15");
    c.samples = 2000;
  } else if (experiment == "mstar") {
    c.sets = {"l1:r=1,n=100"};
    c.m = 50;
    c.trials = 50;
    c.samples = 2000;
    c.c_cal = calibrated(50);
  } else if (experiment == "image") {
    c.sets = {"randcloud:size=100,n=40,r=1"};
    c.m = 80;
    c.trials = 100;
    c.c_cal = calibrated(50);
  } else if (experiment == "recover") {
    c.m = 40;
    c.n = 64;
    c.s = 4;
    c.trials = 100;
    c.sigma = 0.0;
  } else if (experiment == "select") {
    c.sets = {"l1:r=1,n=64"};
    c.m = 40;
    c.s = 4;
    c.samples = 2000;
    c.max_iter = 20000;
    c.c_cal = calibrated(50);
  } else if (experiment == "phase") {
    c.n = 64;
    c.s = 2;
    c.trials = 100;
    c.m_grid = parse_long_list("2,4,6,8,10,12,14,16,18,20,22,24,28,32");
  }
  return c;
}

void apply_setting(ExperimentConfig& c, std::string_view key_in,
                   std::string_view value_in) {
  const std::string key(trim(key_in));
  const std::string_view value = trim(value_in);
  guarded(key, [&] {
    if (key == "experiment") {
      if (value != c.experiment) {
        throw ConfigError("experiment is fixed once chosen ('" + c.experiment +
                          "' vs '" + std::string(value) + "')");
      }
    } else if (key == "family") {
      c.family = std::string(value);
    } else if (key == "m") {
      c.m = static_cast<long>(parse_int(value));
    } else if (key == "n") {
      c.n = static_cast<long>(parse_int(value));
    } else if (key == "set") {
      c.sets.push_back(std::string(value));
    } else if (key == "sets") {
      c.sets.clear();
      for (const auto& s : split(value, ';')) c.sets.push_back(std::string(trim(s)));
    } else if (key == "u_grid") {
      c.u_grid = parse_double_list(value);
    } else if (key == "lambda_grid") {
      c.lambda_grid = parse_double_list(value);
    } else if (key == "m_grid") {
      c.m_grid = parse_long_list(value);
    } else if (key == "trials") {
      c.trials = static_cast<std::size_t>(parse_uint(value));
    } else if (key == "samples") {
      c.samples = static_cast<std::size_t>(parse_uint(value));
    } else if (key == "c_cal") {
      c.c_cal = parse_calibration(value);
    } else if (key == "seed") {
      c.seed = parse_uint(value);
    } else if (key == "calibration_seed") {
      c.calibration_seed = parse_uint(value);
    } else if (key == "sigma") {
      c.sigma = parse_double(value);
    } else if (key == "term2_weight") {
      c.term2_weight = parse_double(value);
    } else if (key == "s") {
      c.s = static_cast<long>(parse_int(value));
    } else if (key == "t") {
      c.t = parse_double(value);
    } else if (key == "pairs") {
      c.pairs = static_cast<std::size_t>(parse_uint(value));
    } else if (key == "probes") {
      c.probes = static_cast<std::size_t>(parse_uint(value));
    } else if (key == "starts") {
      c.starts = static_cast<int>(parse_int(value));
    } else if (key == "epsilon") {
      c.epsilon = parse_double(value);
    } else if (key == "max_iter") {
      c.max_iter = static_cast<int>(parse_int(value));
    } else if (key == "local_trials") {
      c.local_trials = static_cast<std::size_t>(parse_uint(value));
    } else if (key == "out") {
      c.out = std::string(value);
    } else if (key == "format") {
      c.format = std::string(value);
    } else if (key == "threads") {
      c.threads = static_cast<int>(parse_int(value));
    } else if (key == "assert") {
      c.assert_pass = parse_bool(value);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
    return 0;
  });
}

ExperimentConfig parse_config_text(std::string_view text,
                                   const std::filesystem::path& base_dir) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    entries.emplace_back(std::string(trim(line.substr(0, eq))),
                         std::string(trim(line.substr(eq + 1))));
  }
  const auto exp = std::find_if(entries.begin(), entries.end(),
                                [](const auto& e) { return e.first == "experiment"; });
  if (exp == entries.end()) throw ConfigError("config has no 'experiment' key");
  ExperimentConfig c = defaults_for(exp->second);
  // Listed sets replace the defaults rather than adding to them.
  if (std::any_of(entries.begin(), entries.end(),
                  [](const auto& e) { return e.first == "set"; })) {
    c.sets.clear();
  }
  for (const auto& [k, v] : entries) apply_setting(c, k, v);
  c.base_dir = base_dir;
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.parent_path());
}

std::vector<std::pair<std::string, std::string>> to_pairs(
    const ExperimentConfig& c) {
  std::vector<std::pair<std::string, std::string>> kv{
      {"experiment", c.experiment},
      {"family", c.family},
      {"m", std::to_string(c.m)},
      {"n", std::to_string(c.n)},
  };
  std::string sets;
  for (std::size_t i = 0; i < c.sets.size(); ++i) {
    if (i) sets += " ; ";
    sets += c.sets[i];
  }
  kv.emplace_back("sets", sets);
  kv.emplace_back("u_grid", join_doubles(c.u_grid));
  kv.emplace_back("lambda_grid", join_doubles(c.lambda_grid));
  kv.emplace_back("m_grid", join_longs(c.m_grid));
  kv.emplace_back("trials", std::to_string(c.trials));
  kv.emplace_back("samples", std::to_string(c.samples));
  kv.emplace_back("c_cal", to_string(c.c_cal));
  kv.emplace_back("seed", std::to_string(c.seed));
  if (c.calibration_seed) {
    kv.emplace_back("calibration_seed", std::to_string(*c.calibration_seed));
  }
  kv.emplace_back("sigma", format_double(c.sigma));
  kv.emplace_back("term2_weight", format_double(c.term2_weight));
  kv.emplace_back("s", std::to_string(c.s));
  kv.emplace_back("t", format_double(c.t));
  kv.emplace_back("pairs", std::to_string(c.pairs));
  kv.emplace_back("probes", std::to_string(c.probes));
  kv.emplace_back("starts", std::to_string(c.starts));
  kv.emplace_back("epsilon", format_double(c.epsilon));
  kv.emplace_back("max_iter", std::to_string(c.max_iter));
  kv.emplace_back("local_trials", std::to_string(c.local_trials));
  kv.emplace_back("format", c.format);
  kv.emplace_back("out", c.out);
  kv.emplace_back("threads", std::to_string(c.threads));
  kv.emplace_back("assert", c.assert_pass ? "true" : "false");
  return kv;
}

std::string to_text(const ExperimentConfig& c) {
  std::string out;
  for (const auto& [k, v] : to_pairs(c)) {
    if (k == "sets") {
      for (const auto& s : c.sets) out += "set = " + s + "\n";
      continue;
    }
    if (k == "m_grid" && v.empty()) continue;
    out += k + " = " + v + "\n";
  }
  return out;
}

std::string config_hash(const ExperimentConfig& c) {
  std::string canonical;
  for (const auto& [k, v] : to_pairs(c)) {
    if (k == "out" || k == "threads" || k == "assert") continue;
    canonical += k + "=" + v + "\n";
  }
  return hex64(hash_string(canonical));
}

std::uint64_t resolved_calibration_seed(const ExperimentConfig& c) {
  const std::uint64_t s =
      c.calibration_seed ? *c.calibration_seed : mix64(c.seed ^ hash_string("calibration"));
  if (s == c.seed) {
    throw ConfigError("calibration_seed must differ from seed");
  }
  return s;
}

void validate_config(const ExperimentConfig& c) {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), c.experiment) == names.end()) {
    throw ConfigError("unknown experiment '" + c.experiment + "'");
  }
  if (c.format != "csv" && c.format != "json") {
    throw ConfigError("format must be csv or json");
  }
  if (c.m < 1) throw ConfigError("m must be positive");
  if (c.n < 0) throw ConfigError("n must be non-negative");
  if (c.trials < 1) throw ConfigError("trials must be positive");
  if (c.samples < 1) throw ConfigError("samples must be positive");
  if (c.threads < 0) throw ConfigError("threads must be non-negative");
  if (c.max_iter < 1) throw ConfigError("max_iter must be positive");
  if (!(c.term2_weight > 0.0)) throw ConfigError("term2_weight must be positive");
  for (long m : c.m_grid) {
    if (m < 1) throw ConfigError("m_grid entries must be positive");
  }
  for (double l : c.lambda_grid) {
    if (!(l >= 1.0)) throw ConfigError("lambda_grid entries must be >= 1");
  }
  resolved_calibration_seed(c);
}

}  // namespace devbound
