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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "devbound_cli_test";

int devbound(const std::string& args) {
  const std::string cmd = std::string(DEVBOUND_CLI_PATH) + " " + args + " > " +
                          (kRoot / "stdout.txt").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Fresh {
  Fresh() {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);
  }
};

}  // namespace

TEST_CASE("width of the unit ball in R^50") {
  Fresh fresh;
  const fs::path out = kRoot / "w";
  REQUIRE(devbound("width --set ball2:r=1,n=50 --samples 10000 --seed 7 --out " +
                   out.string()) == 0);
  const auto summary = nlohmann::json::parse(slurp(out / "width.summary.json"));
  const double mean = summary["aggregates"]["sets"][0]["mean"];
  CHECK(mean == doctest::Approx(7.0358).epsilon(0.01));
  CHECK(summary["certified"] == true);
  const std::string csv = slurp(out / "width.csv");
  CHECK(csv.rfind("# devbound width config_hash=" + summary["config_hash"].get<std::string>(),
                  0) == 0);
  CHECK(csv.find("set_descriptor,n,statistic,mean") != std::string::npos);
}

TEST_CASE("data files do not depend on the thread count") {
  Fresh fresh;
  const std::vector<std::string> runs = {
      "deviate --set randcloud:size=30,n=10,seed=1 --set l1:r=1,n=10 --m 20 --trials 40 "
      "--samples 500 --calibrate 30",
      "tail --set randcloud:size=20,n=8,seed=2 --m 20 --trials 60 --samples 500 "
      "--calibrate 40",
      "local --set ball2:r=1,n=8 --m 20 --trials 30 --probes 12 --samples 300 "
      "--calibrate 30",
      "increments --m 20 --n 6 --pairs 4 --trials 200",
      "jl --set randcloud:size=12,n=30,seed=3 --m 16 --trials 10 --samples 200 "
      "--local-trials 2",
      "phase --n 16 --s 2 --m-grid 2,8,16 --trials 10",
  };
  for (const auto& args : runs) {
    CAPTURE(args);
    const fs::path a = kRoot / "t1", b = kRoot / "t4";
    fs::remove_all(a);
    fs::remove_all(b);
    REQUIRE(devbound(args + " --seed 5 --threads 1 --out " + a.string()) == 0);
    REQUIRE(devbound(args + " --seed 5 --threads 4 --out " + b.string()) == 0);
    int compared = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
      if (entry.path().extension() != ".csv") continue;
      CAPTURE(entry.path().filename().string());
      CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
      ++compared;
    }
    CHECK(compared >= 1);
  }
}

TEST_CASE("exit codes") {
  Fresh fresh;
  const std::string out = " --out " + (kRoot / "e").string();
  CHECK(devbound("width --m notanumber" + out) == 2);
  CHECK(devbound("width --no-such-flag" + out) == 2);
  CHECK(devbound("width --set cube:n=3" + out) == 2);
  CHECK(devbound("deviate --set zero:n=4 --calibrate 30 --samples 100" + out) == 2);
  CHECK(devbound("singvals --m 60 --n 5 --trials 5 --c-cal 0.01" + out) == 0);
  CHECK(devbound("singvals --m 60 --n 5 --trials 5 --c-cal 0.01 --assert" + out) == 3);
  CHECK(devbound("singvals --m 60 --n 5 --trials 5 --c-cal 3 --assert" + out) == 0);
  CHECK(devbound("" + out) == 2);
}

TEST_CASE("running from a config file") {
  Fresh fresh;
  const fs::path dir = kRoot / "cfg";
  fs::create_directories(dir);
  std::ofstream(dir / "pts.csv") << "1,0,0\n0,1,0\n0,0,1\n";
  std::ofstream(dir / "gamma.cfg") << "experiment = gamma\nset = cloud:file=pts.csv\n"
                                      "samples = 400\nseed = 3\nout = "
                                   << (dir / "out").string() << "\n";
  REQUIRE(devbound("--config " + (dir / "gamma.cfg").string()) == 0);
  CHECK(fs::exists(dir / "out" / "gamma.csv"));
  CHECK(fs::exists(dir / "out" / "gamma.summary.json"));
  // The subcommand form with the same file agrees on the hash.
  REQUIRE(devbound("gamma --config " + (dir / "gamma.cfg").string() + " --out " +
                   (dir / "out2").string()) == 0);
  const auto h1 = nlohmann::json::parse(slurp(dir / "out" / "gamma.summary.json"))["config_hash"];
  const auto h2 = nlohmann::json::parse(slurp(dir / "out2" / "gamma.summary.json"))["config_hash"];
  CHECK(h1 == h2);
  CHECK(devbound("width --config " + (dir / "gamma.cfg").string()) == 2);
}

TEST_CASE("model selection summary reports uniform satisfaction") {
  Fresh fresh;
  const fs::path out = kRoot / "sel";
  REQUIRE(devbound("select --trials 4 --samples 300 --c-cal 1 --max-iter 3000 --out " +
                   out.string()) == 0);
  const auto summary = nlohmann::json::parse(slurp(out / "select.summary.json"));
  CHECK(summary["aggregates"].contains("uniform"));
  CHECK(summary["aggregates"].contains("per_lambda"));
  fs::remove_all(kRoot);
}
