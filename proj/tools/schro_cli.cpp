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

// schro: run one experiment from a config file.
//
//   schro [command] --config run.cfg [--seed N] [--out DIR] [--paths N] [--quiet]
//
// Seed precedence: --seed, then `seed` in the config, then SCHRO_SEED.

#include <charconv>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "schro/config.hpp"
#include "schro/experiment.hpp"
#include "schro/io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bilinear Schrodinger control experiments"};
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<int> paths;
  bool quiet = false;
  app.add_option("command", command, "experiment to run (overrides the config)");
  app.add_option("-c,--config", config_path, "config file (key = value with [sections])");
  app.add_option("--seed", seed, "64-bit seed; overrides the config");
  app.add_option("-o,--out", out_dir, "output directory; overrides the config");
  app.add_option("--paths", paths, "Monte Carlo path count; overrides the config");
  app.add_flag("-q,--quiet", quiet, "no progress output");
  CLI11_PARSE(app, argc, argv);

  std::ostream* log = quiet ? nullptr : &std::cerr;
  schro::ExperimentConfig cfg;
  try {
    if (!config_path.empty()) cfg = schro::parse_config(schro::io::read_file(config_path));
    if (!command.empty()) cfg.command = command;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (paths) {
      cfg.stochastic.paths = *paths;
      cfg.stochastic.growth_paths = *paths;
    }
    if (seed) {
      cfg.seed = *seed;
    } else if (!cfg.seed_explicit) {
      if (const char* env = std::getenv("SCHRO_SEED")) {
        const std::string text = env;
        std::uint64_t value = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc() || ptr != text.data() + text.size())
          throw schro::ConfigError("SCHRO_SEED is not an unsigned 64-bit integer: '" + text + "'");
        cfg.seed = value;
      }
    }
  } catch (const std::exception& e) {
    if (log) *log << "schro: validation_error: " << e.what() << "\n";
    try {
      schro::report_validation_error(out_dir.empty() ? cfg.output_dir : out_dir, e.what());
    } catch (const std::exception& io_error) {
      if (log) *log << "schro: could not write error report: " << io_error.what() << "\n";
    }
    return schro::kExitValidation;
  }
  return schro::run(cfg, log).exit_code;
}
