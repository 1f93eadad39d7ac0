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

#include <filesystem>
#include <fstream>

#include "devbound/config.hpp"
#include "devbound/experiments.hpp"

using namespace devbound;

TEST_CASE("every experiment has defaults that validate") {
  CHECK(experiment_names().size() == 14);
  for (const auto& name : experiment_names()) {
    CAPTURE(name);
    const auto c = defaults_for(name);
    CHECK(c.experiment == name);
    CHECK_NOTHROW(validate_config(c));
  }
  CHECK_THROWS_AS(defaults_for("nonsense"), ConfigError);
}

TEST_CASE("text round trip preserves the hash") {
  const auto c = parse_config_text(R"(
# a deviation sweep
experiment = deviate
m = 60
set = randcloud:size=20,n=10,seed=1   # trailing comment
set = l1:r=2,n=10
u_grid = 0.5, 1, 2
m_grid = 2..5
c_cal = calibrate:40
seed = 9
calibration_seed = 11
threads = 2
out = somewhere
)");
  CHECK(c.m == 60);
  REQUIRE(c.sets.size() == 2);
  CHECK(c.sets[1] == "l1:r=2,n=10");
  CHECK(c.u_grid == std::vector<double>{0.5, 1.0, 2.0});
  CHECK(c.m_grid == std::vector<long>{2, 3, 4, 5});
  CHECK(c.c_cal.calibrate);
  CHECK(c.c_cal.trials == 40);
  CHECK(*c.calibration_seed == 11);

  const auto back = parse_config_text(to_text(c));
  CHECK(to_text(back) == to_text(c));
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash(c).size() == 16);

  auto moved = c;
  moved.out = "elsewhere";
  moved.threads = 7;
  moved.assert_pass = true;
  CHECK(config_hash(moved) == config_hash(c));
  moved.seed = 10;
  CHECK(config_hash(moved) != config_hash(c));
}

TEST_CASE("listed sets replace the defaults") {
  const auto c = parse_config_text("experiment = width\nset = ball2:n=3\n");
  CHECK(c.sets == std::vector<std::string>{"ball2:n=3"});
  const auto d = parse_config_text("experiment = width\n");
  CHECK(d.sets == defaults_for("width").sets);
  auto e = defaults_for("deviate");
  apply_setting(e, "sets", "ball2:n=3; l1:n=3");
  CHECK(e.sets == std::vector<std::string>{"ball2:n=3", "l1:n=3"});
}

TEST_CASE("calibration sources") {
  CHECK_FALSE(parse_calibration("2.5").calibrate);
  CHECK(parse_calibration("2.5").value == 2.5);
  CHECK(parse_calibration("calibrate:30").trials == 30);
  CHECK(to_string(parse_calibration("calibrate:75")) == "calibrate:75");
  CHECK_THROWS_AS(parse_calibration("calibrate:20"), ConfigError);
  CHECK_THROWS_AS(parse_calibration("-1"), ConfigError);
  CHECK_THROWS_AS(parse_calibration("calibrate"), ConfigError);
}

TEST_CASE("malformed configs") {
  CHECK_THROWS_AS(parse_config_text("m = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("experiment = width\nbogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("experiment = width\nm = three\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("experiment = width\njust words\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("experiment = frobnicate\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("experiment = width\nexperiment = tail\n"), ConfigError);

  auto c = defaults_for("tail");
  c.calibration_seed = c.seed;
  CHECK_THROWS_AS(validate_config(c), ConfigError);
  c.calibration_seed.reset();
  CHECK(resolved_calibration_seed(c) != c.seed);
  c.format = "xml";
  CHECK_THROWS_AS(validate_config(c), ConfigError);
  c.format = "csv";
  c.lambda_grid = {0.5};
  CHECK_THROWS_AS(validate_config(c), ConfigError);
  c.lambda_grid = {1.0};
  c.term2_weight = 0.0;
  CHECK_THROWS_AS(validate_config(c), ConfigError);
  const auto w = parse_config_text("experiment = select\nterm2_weight = 2.5\n");
  CHECK(w.term2_weight == 2.5);
  CHECK(config_hash(w) != config_hash(defaults_for("select")));
}

TEST_CASE("config files resolve relative cloud paths") {
  const auto dir = std::filesystem::temp_directory_path() / "devbound_cfg_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "pts.csv") << "1,0\n0,1\n";
    std::ofstream(dir / "run.cfg") << "experiment = width\nset = cloud:file=pts.csv\n";
  }
  const auto c = load_config(dir / "run.cfg");
  CHECK(c.base_dir == dir);
  CHECK_THROWS_AS(load_config(dir / "missing.cfg"), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("calibrating on a zero-complexity set is rejected") {
  auto c = defaults_for("deviate");
  c.sets = {"zero:n=5"};
  c.m = 10;
  c.samples = 200;
  c.c_cal = parse_calibration("calibrate:30");
  CHECK_THROWS_AS(calibrate(c), ConfigError);
  c.c_cal = parse_calibration("1.5");
  CHECK(calibrate(c) == 1.5);
}
