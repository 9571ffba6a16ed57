// Copyright 2026 The schro Authors
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

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "schro/config.hpp"
#include "schro/experiment.hpp"
#include "schro/io.hpp"

namespace {

using namespace schro;
namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("schro_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir.parent_path());
  return dir;
}

std::set<std::string> listing(const fs::path& dir) {
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) names.insert(e.path().filename().string());
  return names;
}

nlohmann::json load_json(const fs::path& p) { return nlohmann::json::parse(io::read_file(p.string())); }

// Small, fast settings shared by the run tests.
ExperimentConfig small(const std::string& command, const fs::path& out) {
  ExperimentConfig c;
  c.command = command;
  c.output_dir = out.string();
  c.grid.n_points = 128;
  c.grid.truncation = 6;
  c.conditions.index_bound = 6;
  c.control.horizon = 2.0;
  c.control.initial = "random 3";
  c.stochastic.paths = 50;
  c.stochastic.max_steps = 20;
  c.stochastic.block = 2;
  c.stochastic.n_max = 10;
  c.stochastic.growth_steps = 20;
  c.stochastic.growth_paths = 10;
  c.stochastic.radius_factor = 0.999;
  return c;
}

TEST(Config, EmptyTextGivesDefaults) {
  const auto c = parse_config("# nothing here\n\n");
  EXPECT_EQ(c, ExperimentConfig{});
  EXPECT_FALSE(c.seed_explicit);
  EXPECT_NO_THROW(validate_config(c));
}

TEST(Config, ParsesSectionsAndComments) {
  const auto c = parse_config("command = steer  # trailing\nseed = 42\n[grid]\nn_points = 256\n[control]\ndt = 2e-3\n"
                              "[stochastic]\nper_path_csv = true\n");
  EXPECT_EQ(c.command, "steer");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_TRUE(c.seed_explicit);
  EXPECT_EQ(c.grid.n_points, 256);
  EXPECT_EQ(c.control.dt, 2e-3);
  EXPECT_TRUE(c.stochastic.per_path_csv);
}

TEST(Config, ErrorsNameTheLine) {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("seed = 1\nseed = 2\n").find("line 2"), std::string::npos);
  EXPECT_NE(message("seed = 1\nseed = 2\n").find("duplicate"), std::string::npos);
  EXPECT_NE(message("[grid]\nbogus = 1\n").find("unknown key 'grid.bogus'"), std::string::npos);
  EXPECT_NE(message("[nope]\n").find("line 1"), std::string::npos);
  EXPECT_NE(message("[grid]\nn_points = many\n").find("line 2"), std::string::npos);
  EXPECT_NE(message("[grid]\nn_points = 12.5\n").find("line 2"), std::string::npos);
  EXPECT_NE(message("just words\n").find("line 1"), std::string::npos);
  EXPECT_NE(message("[stochastic]\nper_path_csv = yes\n").find("line 2"), std::string::npos);
}

TEST(Config, SerializeRoundTrip) {
  auto c = parse_config("command = random-growth\nseed = 18446744073709551615\n[control]\ndt = 0.1\nalpha = 0.3\n"
                        "[potential]\nq = gauss 1 0.37 0.1 + cosine 0.5 3\n");
  EXPECT_EQ(c.seed, 18446744073709551615ULL);
  const auto again = parse_config(c.serialize());
  EXPECT_EQ(again, c);
  EXPECT_EQ(config_hash(again), config_hash(c));
  c.output_dir = "elsewhere";
  EXPECT_EQ(config_hash(again), config_hash(c));
  c.control.alpha = 0.30000000000000004;
  EXPECT_NE(config_hash(again), config_hash(c));
}

TEST(Config, ValidationRanges) {
  auto bad = [](auto mutate) {
    ExperimentConfig c;
    mutate(c);
    EXPECT_THROW(validate_config(c), ConfigError);
  };
  bad([](auto& c) { c.command = "fly"; });
  bad([](auto& c) { c.control.dt = 0.0; });
  bad([](auto& c) { c.control.dt = 0.5; });
  bad([](auto& c) { c.grid.truncation = 200; });
  bad([](auto& c) { c.stochastic.paths = 10; });
  bad([](auto& c) { c.stochastic.n_max = 100; });
  bad([](auto& c) { c.potential.csv = "/definitely/missing.csv"; });
  bad([](auto& c) { c.control.target = 0; });
}

TEST(Run, ValidationErrorWritesOnlyErrorJson) {
  const auto out = scratch("invalid");
  auto c = small("stabilize", out);
  c.control.dt = -1.0;
  EXPECT_EQ(run(c).exit_code, kExitValidation);
  EXPECT_EQ(listing(out), (std::set<std::string>{"error.json"}));
  EXPECT_EQ(load_json(out / "error.json")["status"], "validation_error");
  EXPECT_FALSE(fs::exists(out.string() + ".staging"));
}

TEST(Run, NumericalFailureWritesOnlyManifest) {
  const auto out = scratch("degenerate");
  auto c = small("random-growth", out);
  c.stochastic.radius_factor = 1e-9;  // no path can ever enter the ball
  EXPECT_EQ(run(c).exit_code, kExitNumerical);
  EXPECT_EQ(listing(out), (std::set<std::string>{"manifest.json"}));
  EXPECT_EQ(load_json(out / "manifest.json")["status"], "numerical_failure");
}

TEST(Run, EveryCommandSucceeds) {
  for (auto name : kCommands) {
    const auto out = scratch("cmd_" + std::string(name));
    auto c = small(std::string(name), out);
    if (name == "steer") c.control.initial = "mode 2";
    const auto r = run(c);
    ASSERT_EQ(r.exit_code, kExitOk) << name << ": " << r.message;
    const auto manifest = load_json(out / "manifest.json");
    EXPECT_EQ(manifest["status"], "ok");
    EXPECT_EQ(manifest["command"], name);
    EXPECT_EQ(manifest["config_hash"], hex64(config_hash(c)));
    EXPECT_EQ(parse_config(manifest["config_text"].get<std::string>()), c);
    for (const auto& f : manifest["outputs"]) EXPECT_TRUE(fs::exists(out / f.get<std::string>())) << f;
    EXPECT_TRUE(fs::exists(out / "result.json"));
  }
}

TEST(Run, ByteIdenticalReruns) {
  for (auto name : {"stabilize", "random-growth"}) {
    const auto a = scratch(std::string("det_a_") + name);
    const auto b = scratch(std::string("det_b_") + name);
    auto ca = small(name, a);
    auto cb = small(name, b);
    ASSERT_EQ(run(ca).exit_code, kExitOk);
    ASSERT_EQ(run(cb).exit_code, kExitOk);
    for (const auto& e : fs::directory_iterator(a)) {
      const auto file = e.path().filename().string();
      if (file == "manifest.json") continue;  // wall time and output path differ
      EXPECT_EQ(io::read_file(e.path().string()), io::read_file((b / file).string())) << name << "/" << file;
    }
  }
}

TEST(Run, RerunReplacesOldArtifacts) {
  const auto out = scratch("replace");
  fs::create_directories(out);
  std::ofstream(out / "stale.txt") << "old";
  ASSERT_EQ(run(small("spectrum", out)).exit_code, kExitOk);
  EXPECT_FALSE(fs::exists(out / "stale.txt"));
}

#ifdef SCHRO_CLI_PATH
int cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + SCHRO_CLI_PATH + " -q " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, SeedPrecedence) {
  const auto dir = scratch("cli_seed");
  fs::create_directories(dir);
  const auto with_seed = dir / "with_seed.cfg";
  const auto without = dir / "without.cfg";
  std::ofstream(with_seed) << "command = spectrum\nseed = 11\n[grid]\nn_points = 64\ntruncation = 4\n[conditions]\nindex_bound = 4\n";
  std::ofstream(without) << "command = spectrum\n[grid]\nn_points = 64\ntruncation = 4\n[conditions]\nindex_bound = 4\n";
  auto seed_of = [&](const std::string& args, const std::string& env) {
    const auto out = dir / "out";
    EXPECT_EQ(cli(args + " -o " + out.string(), env), kExitOk) << args;
    return load_json(out / "manifest.json")["seed"].get<std::uint64_t>();
  };
  EXPECT_EQ(seed_of("-c " + without.string(), ""), 1u);
  EXPECT_EQ(seed_of("-c " + without.string(), "SCHRO_SEED=5"), 5u);
  EXPECT_EQ(seed_of("-c " + with_seed.string(), "SCHRO_SEED=5"), 11u);
  EXPECT_EQ(seed_of("-c " + with_seed.string() + " --seed 13", "SCHRO_SEED=5"), 13u);
  EXPECT_EQ(cli("-c " + without.string() + " -o " + (dir / "bad").string(), "SCHRO_SEED=x"), kExitValidation);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli_exit");
  fs::create_directories(dir);
  const auto cfg = dir / "dup.cfg";
  std::ofstream(cfg) << "seed = 1\nseed = 2\n";
  EXPECT_EQ(cli("-c " + cfg.string() + " -o " + (dir / "o1").string()), kExitValidation);
  EXPECT_EQ(listing(dir / "o1"), (std::set<std::string>{"error.json"}));
  EXPECT_EQ(cli("-c " + (dir / "missing.cfg").string() + " -o " + (dir / "o2").string()), kExitValidation);
  EXPECT_EQ(cli("no-such-command -o " + (dir / "o3").string()), kExitValidation);
}
#endif

}  // namespace
