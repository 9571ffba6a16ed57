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

#pragma once

// Experiment configuration: a line-based `key = value` format with
// [sections]. Every key has a default; serialize() writes all of them so
// the resolved config can be echoed verbatim and reparsed.

#include <array>
#include <cmath>
#include <cstdio>
#include <type_traits>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "schro/error.hpp"
#include "schro/io.hpp"

namespace schro {

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

inline constexpr std::array<std::string_view, 7> kCommands = {
    "spectrum", "check-conditions", "stabilize", "steer", "random-growth", "nonlinear-stabilize", "linearized-probe"};

struct GridSection {
  int n_points = 512;
  double length = 1.0;
  int truncation = 8;
  std::string discretization = "sine-galerkin";  // or finite-difference
  int galerkin_modes = 0;                          // 0: automatic
};

struct PotentialSection {
  std::string v = "linear 1";
  std::string q = "gauss 1 0.37 0.1";
  std::string csv;  // x,v,q table; overrides v and q when set
};

struct ConditionsSection {
  int index_bound = 8;
  int nonlinear_index_bound = 4;
  double coupling_tol = 1e-8;
  double gap_tol = 1e-6;
  int genericity_samples = 0;
  int genericity_terms = 5;
  double genericity_amplitude = 5.0;
};

struct ControlSection {
  double dt = 1e-3;
  double alpha = 0.1;
  double delta = 0.5;
  int target = 1;
  int hold_steps = 1;
  double horizon = 20.0;
  double stop_threshold = 1e-4;
  std::string initial = "superpose 1 2";  // mode j | superpose j k | random SEED
  std::string final = "mode 1";
  double eps = 0.1;
  double budget = 1e6;
  double max_time = 200.0;
  int sample_every = 10;
  int probe_source = 1;
  int probe_mode = 2;
  double probe_amplitude = 1e-3;
};

struct StochasticSection {
  double b_scale = 20.0;
  double b_exponent = 2.0;
  int terms = 16;
  std::string noise = "gaussian";
  int paths = 200;
  std::string initial = "mode 1";
  double radius_factor = 0.5;  // r = radius_factor * ||z0||_{-s}
  double stopping_s = 1.0;
  int max_steps = 500;
  int block = 10;
  int n_max = 20;
  int growth_steps = 500;
  double growth_s = 2.0;
  int growth_paths = 100;
  bool per_path_csv = false;
};

struct ExperimentConfig {
  std::string command = "spectrum";
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  GridSection grid;
  PotentialSection potential;
  ConditionsSection conditions;
  ControlSection control;
  StochasticSection stochastic;

  // Set when the parsed text assigned `seed`; lets the environment fill in
  // the seed only when nothing more specific did.
  bool seed_explicit = false;

  bool operator==(const ExperimentConfig& o) const { return serialize() == o.serialize(); }
  std::string serialize() const;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& text, int line, const std::string& key) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw ConfigError("line " + std::to_string(line) + ": '" + key + "' expects a number, got '" + text + "'");
  return value;
}

inline bool parse_bool(const std::string& text, int line, const std::string& key) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError("line " + std::to_string(line) + ": '" + key + "' expects true or false, got '" + text + "'");
}

struct Field {
  std::string section;  // empty for top-level keys
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&, int)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename Member>
Field make_field(std::string section, std::string key, Member member) {
  Field f;
  f.section = std::move(section);
  f.key = key;
  f.set = [member, key](ExperimentConfig& c, const std::string& text, int line) {
    auto& slot = member(c);
    using T = std::remove_reference_t<decltype(slot)>;
    if constexpr (std::is_same_v<T, std::string>) {
      slot = text;
    } else if constexpr (std::is_same_v<T, bool>) {
      slot = parse_bool(text, line, key);
    } else {
      slot = parse_number<T>(text, line, key);
    }
  };
  f.get = [member](const ExperimentConfig& c) {
    const auto& slot = member(const_cast<ExperimentConfig&>(c));
    using T = std::remove_cvref_t<decltype(slot)>;
    if constexpr (std::is_same_v<T, std::string>) {
      return slot;
    } else if constexpr (std::is_same_v<T, bool>) {
      return std::string(slot ? "true" : "false");
    } else if constexpr (std::is_floating_point_v<T>) {
      return io::format_real(slot);
    } else {
      return std::to_string(slot);
    }
  };
  return f;
}

#define SCHRO_FIELD(section, path, key) make_field(section, key, [](ExperimentConfig& c) -> auto& { return c.path; })

inline const std::vector<Field>& fields() {
  static const std::vector<Field> all = {
      SCHRO_FIELD("", command, "command"),
      SCHRO_FIELD("", seed, "seed"),
      SCHRO_FIELD("", output_dir, "output_dir"),
      SCHRO_FIELD("grid", grid.n_points, "n_points"),
      SCHRO_FIELD("grid", grid.length, "length"),
      SCHRO_FIELD("grid", grid.truncation, "truncation"),
      SCHRO_FIELD("grid", grid.discretization, "discretization"),
      SCHRO_FIELD("grid", grid.galerkin_modes, "galerkin_modes"),
      SCHRO_FIELD("potential", potential.v, "v"),
      SCHRO_FIELD("potential", potential.q, "q"),
      SCHRO_FIELD("potential", potential.csv, "csv"),
      SCHRO_FIELD("conditions", conditions.index_bound, "index_bound"),
      SCHRO_FIELD("conditions", conditions.nonlinear_index_bound, "nonlinear_index_bound"),
      SCHRO_FIELD("conditions", conditions.coupling_tol, "coupling_tol"),
      SCHRO_FIELD("conditions", conditions.gap_tol, "gap_tol"),
      SCHRO_FIELD("conditions", conditions.genericity_samples, "genericity_samples"),
      SCHRO_FIELD("conditions", conditions.genericity_terms, "genericity_terms"),
      SCHRO_FIELD("conditions", conditions.genericity_amplitude, "genericity_amplitude"),
      SCHRO_FIELD("control", control.dt, "dt"),
      SCHRO_FIELD("control", control.alpha, "alpha"),
      SCHRO_FIELD("control", control.delta, "delta"),
      SCHRO_FIELD("control", control.target, "target"),
      SCHRO_FIELD("control", control.hold_steps, "hold_steps"),
      SCHRO_FIELD("control", control.horizon, "horizon"),
      SCHRO_FIELD("control", control.stop_threshold, "stop_threshold"),
      SCHRO_FIELD("control", control.initial, "initial"),
      SCHRO_FIELD("control", control.final, "final"),
      SCHRO_FIELD("control", control.eps, "eps"),
      SCHRO_FIELD("control", control.budget, "budget"),
      SCHRO_FIELD("control", control.max_time, "max_time"),
      SCHRO_FIELD("control", control.sample_every, "sample_every"),
      SCHRO_FIELD("control", control.probe_source, "probe_source"),
      SCHRO_FIELD("control", control.probe_mode, "probe_mode"),
      SCHRO_FIELD("control", control.probe_amplitude, "probe_amplitude"),
      SCHRO_FIELD("stochastic", stochastic.b_scale, "b_scale"),
      SCHRO_FIELD("stochastic", stochastic.b_exponent, "b_exponent"),
      SCHRO_FIELD("stochastic", stochastic.terms, "terms"),
      SCHRO_FIELD("stochastic", stochastic.noise, "noise"),
      SCHRO_FIELD("stochastic", stochastic.paths, "paths"),
      SCHRO_FIELD("stochastic", stochastic.initial, "initial"),
      SCHRO_FIELD("stochastic", stochastic.radius_factor, "radius_factor"),
      SCHRO_FIELD("stochastic", stochastic.stopping_s, "stopping_s"),
      SCHRO_FIELD("stochastic", stochastic.max_steps, "max_steps"),
      SCHRO_FIELD("stochastic", stochastic.block, "block"),
      SCHRO_FIELD("stochastic", stochastic.n_max, "n_max"),
      SCHRO_FIELD("stochastic", stochastic.growth_steps, "growth_steps"),
      SCHRO_FIELD("stochastic", stochastic.growth_s, "growth_s"),
      SCHRO_FIELD("stochastic", stochastic.growth_paths, "growth_paths"),
      SCHRO_FIELD("stochastic", stochastic.per_path_csv, "per_path_csv"),
  };
  return all;
}

#undef SCHRO_FIELD

inline const std::set<std::string>& known_sections() {
  static const std::set<std::string> s = {"grid", "potential", "conditions", "control", "stochastic"};
  return s;
}

}  // namespace detail

/// Parses configuration text. Syntax, unknown-key, duplicate and type
/// errors throw ConfigError naming the offending line. Range checks are
/// separate (validate_config).
inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const std::string where = "line " + std::to_string(line) + ": ";
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError(where + "unterminated section header");
      section = detail::trim(std::string_view(body).substr(1, body.size() - 2));
      if (!detail::known_sections().contains(section)) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = detail::trim(std::string_view(body).substr(0, eq));
    const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "missing key");
    const detail::Field* field = nullptr;
    for (const auto& f : detail::fields())
      if (f.section == section && f.key == key) field = &f;
    const std::string qualified = section.empty() ? key : section + "." + key;
    if (!field) throw ConfigError(where + "unknown key '" + qualified + "'");
    if (!seen.insert(qualified).second) throw ConfigError(where + "duplicate key '" + qualified + "'");
    field->set(cfg, value, line);
    if (section.empty() && key == "seed") cfg.seed_explicit = true;
  }
  return cfg;
}

/// Every key, in registry order, with its resolved value.
inline std::string ExperimentConfig::serialize() const {
  std::string out;
  std::string section;
  for (const auto& f : detail::fields()) {
    if (f.section != section) {
      section = f.section;
      out += "\n[" + section + "]\n";
    }
    out += f.key + " = " + f.get(*this) + "\n";
  }
  return out;
}

inline std::string serialize(const ExperimentConfig& cfg) { return cfg.serialize(); }

/// FNV-1a over the serialized resolved config. The output location is not
/// part of the experiment, so it is left out.
inline std::uint64_t config_hash(const ExperimentConfig& cfg) {
  ExperimentConfig located = cfg;
  located.output_dir.clear();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : located.serialize()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Range checks run before any computation.
inline void validate_config(const ExperimentConfig& c) {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  bool known = false;
  for (auto name : kCommands) known = known || name == c.command;
  if (!known) fail("unknown command '" + c.command + "'");
  if (c.output_dir.empty()) fail("output_dir must not be empty");

  const auto& g = c.grid;
  if (g.n_points < 16) fail("grid.n_points must be at least 16");
  if (!(g.length > 0.0)) fail("grid.length must be positive");
  if (g.truncation < 1) fail("grid.truncation must be positive");
  if (g.truncation > g.n_points / 4) fail("grid.truncation must not exceed n_points / 4");
  if (g.discretization != "sine-galerkin" && g.discretization != "finite-difference")
    fail("grid.discretization must be sine-galerkin or finite-difference");
  if (g.galerkin_modes < 0) fail("grid.galerkin_modes must be non-negative");
  if (!c.potential.csv.empty() && !std::filesystem::exists(c.potential.csv))
    fail("potential.csv: file '" + c.potential.csv + "' does not exist");

  const auto& k = c.conditions;
  if (k.index_bound < 1 || k.index_bound > g.truncation) fail("conditions.index_bound must be in [1, truncation]");
  if (k.nonlinear_index_bound < 1 || k.nonlinear_index_bound > std::min(g.truncation, 16))
    fail("conditions.nonlinear_index_bound must be in [1, min(truncation, 16)]");
  if (!(k.coupling_tol >= 0.0) || !(k.gap_tol >= 0.0)) fail("conditions tolerances must be non-negative");
  if (k.genericity_samples < 0 || k.genericity_terms < 1 || !(k.genericity_amplitude >= 0.0))
    fail("conditions genericity parameters out of range");

  const auto& u = c.control;
  if (!(u.dt > 0.0) || !std::isfinite(u.dt)) fail("control.dt must be positive");
  if (u.dt > 0.1) fail("control.dt must not exceed 0.1");
  if (!(u.alpha > 0.0)) fail("control.alpha must be positive");
  if (!(u.delta > 0.0)) fail("control.delta must be positive");
  if (u.target < 1 || u.target > g.truncation) fail("control.target must be in [1, truncation]");
  if (u.hold_steps < 1) fail("control.hold_steps must be positive");
  if (!(u.horizon > 0.0)) fail("control.horizon must be positive");
  if (!(u.stop_threshold >= 0.0)) fail("control.stop_threshold must be non-negative");
  if (!(u.eps > 0.0)) fail("control.eps must be positive");
  if (!(u.budget > 0.0)) fail("control.budget must be positive");
  if (!(u.max_time > 0.0)) fail("control.max_time must be positive");
  if (u.sample_every < 1) fail("control.sample_every must be positive");
  if (u.probe_source < 1 || u.probe_source > g.truncation || u.probe_mode < 1 || u.probe_mode > g.truncation)
    fail("control.probe_source/probe_mode must be in [1, truncation]");
  if (!(u.probe_amplitude > 0.0)) fail("control.probe_amplitude must be positive");

  const auto& s = c.stochastic;
  if (!(s.b_scale >= 0.0) || !std::isfinite(s.b_exponent)) fail("stochastic.b_scale must be non-negative");
  if (s.terms < 1) fail("stochastic.terms must be positive");
  if (s.noise != "gaussian" && s.noise != "logistic") fail("stochastic.noise must be gaussian or logistic");
  if (s.paths < 50) fail("stochastic.paths must be at least 50");
  if (!(s.radius_factor > 0.0)) fail("stochastic.radius_factor must be positive");
  if (!(s.stopping_s > 0.0) || !(s.growth_s > 0.0)) fail("stochastic Sobolev orders must be positive");
  if (s.max_steps < 0 || s.block < 1 || s.n_max < 0) fail("stochastic horizon parameters out of range");
  if (static_cast<long>(s.n_max) * s.block > s.max_steps) fail("stochastic.n_max * block exceeds max_steps");
  if (s.growth_steps < 1 || s.growth_paths < 1) fail("stochastic growth parameters must be positive");
}

}  // namespace schro
