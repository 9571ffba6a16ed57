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

// Experiment orchestration behind the command-line tool. run() validates,
// executes one command and writes its artifacts through a staged directory:
// manifest.json, result.json, CSV tables and plot.svg.

#include <chrono>
#include <cstdint>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "schro/conditions.hpp"
#include "schro/config.hpp"
#include "schro/controllability.hpp"
#include "schro/error.hpp"
#include "schro/io.hpp"
#include "schro/lyapunov.hpp"
#include "schro/nonlinear.hpp"
#include "schro/potentials.hpp"
#include "schro/propagator.hpp"
#include "schro/random.hpp"
#include "schro/spectral_core.hpp"
#include "schro/stochastic.hpp"

namespace schro {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitNumerical = 3 };

struct RunResult {
  int exit_code = kExitOk;
  std::string message;
};

/// Parses "mode j", "superpose j k" or "random [seed]".
inline QuantumState parse_state(const std::string& text, int truncation, std::uint64_t default_seed) {
  std::istringstream in(text);
  std::string kind;
  in >> kind;
  auto mode = [&](const char* what) {
    long j = 0;
    if (!(in >> j) || j < 1 || j > truncation)
      throw InputError("state '" + text + "': " + what + " must be a mode number in [1, " + std::to_string(truncation) + "]");
    return static_cast<int>(j);
  };
  QuantumState out;
  if (kind == "mode") {
    out = QuantumState::eigenstate(truncation, mode("mode"));
  } else if (kind == "superpose") {
    const int j = mode("first mode");
    const int k = mode("second mode");
    if (j == k) throw InputError("state '" + text + "': superposed modes must differ");
    out = QuantumState{ComplexVector::Zero(truncation)};
    out.coeffs[j - 1] = out.coeffs[k - 1] = 1.0 / std::sqrt(2.0);
  } else if (kind == "random") {
    std::uint64_t seed = default_seed;
    std::string tok;
    if (in >> tok) {
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), seed);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) throw InputError("state '" + text + "': bad seed");
    }
    Rng rng = make_stream(seed, 0, 0x7374617465);  // "state"
    out = QuantumState::random(truncation, rng);
  } else {
    throw InputError("state '" + text + "': expected 'mode j', 'superpose j k' or 'random [seed]'");
  }
  std::string rest;
  if (in >> rest) throw InputError("state '" + text + "': trailing tokens");
  return out;
}

struct ExperimentContext {
  Grid grid;
  SpectralBasis basis;
  PropagatorTables tables;
};

inline ExperimentContext build_context(const ExperimentConfig& cfg) {
  Grid grid(cfg.grid.n_points, cfg.grid.length);
  PotentialPair pots = cfg.potential.csv.empty()
                           ? sample_potentials(grid, AnalyticPotential::parse(cfg.potential.v),
                                               AnalyticPotential::parse(cfg.potential.q))
                           : load_potential_csv(cfg.potential.csv, grid);
  BasisOptions opts;
  opts.discretization =
      cfg.grid.discretization == "finite-difference" ? Discretization::finite_difference : Discretization::sine_galerkin;
  opts.galerkin_modes = cfg.grid.galerkin_modes;
  auto basis = build_basis(grid, pots, cfg.grid.truncation, opts);
  PropagatorTables tables(basis, cfg.control.dt);
  return {grid, std::move(basis), std::move(tables)};
}

inline FeedbackParams feedback_params(const ExperimentConfig& cfg) {
  FeedbackParams p;
  p.alpha = cfg.control.alpha;
  p.delta = cfg.control.delta;
  p.target = cfg.control.target;
  p.hold_steps = cfg.control.hold_steps;
  p.stop_threshold = cfg.control.stop_threshold;
  return p;
}

inline RandomAmplitudeModel amplitude_model(const ExperimentConfig& cfg) {
  const auto& s = cfg.stochastic;
  return RandomAmplitudeModel::power_law(s.terms, s.b_scale, s.b_exponent, parse_noise_family(s.noise));
}

/// The resolved config as {section: {key: value}} with values as written in
/// the config text.
inline nlohmann::json config_json(const ExperimentConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& f : detail::fields()) {
    if (f.section.empty()) j[f.key] = f.get(cfg);
    else j[f.section][f.key] = f.get(cfg);
  }
  return j;
}

/// Artifacts produced by one command, before they touch the disk.
struct Artifacts {
  nlohmann::json result;
  std::vector<std::pair<std::string, std::string>> files;  // name, content
  nlohmann::json manifest_extra = nlohmann::json::object();
};

namespace detail {

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline nlohmann::json vector_json(const RealVector& v) {
  std::vector<double> out(v.data(), v.data() + v.size());
  return out;
}

inline nlohmann::json complex_json(Complex z) { return {{"re", z.real()}, {"im", z.imag()}}; }

inline nlohmann::json closed_loop_summary(const ClosedLoopRecord& rec) {
  double worst_increase = 0.0;
  for (std::size_t k = 1; k < rec.lyapunov.size(); ++k)
    worst_increase = std::max(worst_increase, rec.lyapunov[k] - rec.lyapunov[k - 1]);
  nlohmann::json j;
  j["initial_lyapunov"] = rec.lyapunov.front();
  j["final_lyapunov"] = rec.lyapunov.back();
  j["lyapunov_ratio"] = rec.lyapunov.front() > 0 ? rec.lyapunov.back() / rec.lyapunov.front() : 0.0;
  j["max_lyapunov_increase"] = worst_increase;
  j["final_time"] = rec.times.back();
  j["converged"] = rec.converged;
  j["blow_up"] = rec.blow_up;
  j["hypothesis_warning"] = rec.hypothesis_warning;
  j["delta_halvings"] = rec.delta_halvings;
  j["final_delta"] = rec.final_delta;
  j["dissipation"] = rec.dissipation.back();
  j["final_target_population"] = rec.target_population.back();
  return j;
}

inline std::string lyapunov_plot(const ClosedLoopRecord& rec, const std::string& title) {
  return io::svg_line_plot({title, "t", "V", true}, {{"V(t)", rec.times, rec.lyapunov}});
}

inline Artifacts run_spectrum(const ExperimentConfig& cfg, const ExperimentContext& ctx) {
  const auto& b = ctx.basis;
  const int m = b.truncation();
  const RealVector mu = dirichlet_laplacian_spectrum(ctx.grid, m);
  Artifacts a;
  a.result["truncation"] = m;
  a.result["discretization"] = cfg.grid.discretization;
  a.result["eigenvalues"] = vector_json(b.eigenvalues);
  a.result["dirichlet_scale"] = vector_json(mu);
  nlohmann::json coupling = nlohmann::json::array();
  for (int j = 0; j < m; ++j) coupling.push_back(vector_json(b.coupling.row(j).transpose()));
  a.result["coupling"] = coupling;

  io::Table t{{"j", "lambda", "mu", "coupling_1j"}, std::vector<std::vector<double>>(4)};
  std::vector<double> js, lams;
  for (int j = 1; j <= m; ++j) {
    t.columns[0].push_back(j);
    t.columns[1].push_back(b.lambda(j));
    t.columns[2].push_back(mu[j - 1]);
    t.columns[3].push_back(b.coupling(0, j - 1));
    js.push_back(j);
    lams.push_back(b.lambda(j));
  }
  a.files.emplace_back("spectrum.csv", io::to_csv(t));
  a.files.emplace_back("plot.svg", io::svg_line_plot({"eigenvalues", "j", "lambda_j", false}, {{"lambda_j", js, lams}}));
  return a;
}

inline Artifacts run_check_conditions(const ExperimentConfig& cfg, const ExperimentContext& ctx) {
  const auto& k = cfg.conditions;
  const auto& b = ctx.basis;
  const auto [coupling, gap] = check_condition_p(b, k.index_bound, k.coupling_tol, k.gap_tol);
  const auto alpha = check_alpha_admissible(b, cfg.control.alpha, k.index_bound, k.coupling_tol);
  const auto [nl_coupling, nl_gap] = check_condition_2p(b, k.nonlinear_index_bound, k.coupling_tol, k.gap_tol);
  Artifacts a;
  a.result["reports"] = {coupling, gap, alpha, nl_coupling, nl_gap};
  a.result["linear_passed"] = coupling.passed() && gap.passed();
  a.result["nonlinear_passed"] = nl_coupling.passed() && nl_gap.passed();
  if (k.genericity_samples > 0) {
    BasisOptions opts;
    opts.discretization = cfg.grid.discretization == "finite-difference" ? Discretization::finite_difference
                                                                          : Discretization::sine_galerkin;
    a.result["genericity"] = genericity_scan(ctx.grid, random_cosine_family(k.genericity_terms, k.genericity_amplitude),
                                             b.potentials.q, k.genericity_samples, k.index_bound, k.coupling_tol,
                                             k.gap_tol, cfg.seed, opts);
  }
  io::Table t{{"j", "coupling_1j"}, std::vector<std::vector<double>>(2)};
  std::vector<double> mag;
  for (int j = 1; j <= k.index_bound; ++j) {
    t.columns[0].push_back(j);
    t.columns[1].push_back(b.coupling(0, j - 1));
    mag.push_back(std::abs(b.coupling(0, j - 1)));
  }
  a.files.emplace_back("couplings.csv", io::to_csv(t));
  a.files.emplace_back("plot.svg",
                       io::svg_line_plot({"first-row couplings", "j", "|B_1j|", true}, {{"|B_1j|", t.columns[0], mag}}));
  return a;
}

inline Artifacts run_stabilize(const ExperimentConfig& cfg, const ExperimentContext& ctx, bool cubic) {
  const auto& b = ctx.basis;
  const auto params = feedback_params(cfg);
  QuantumState z0 = parse_state(cfg.control.initial, b.truncation(), cfg.seed);
  Artifacts a;
  ClosedLoopRecord rec;
  if (cubic) {
    rec = nonlinear_closed_loop(z0, b, ctx.tables, params, cfg.control.horizon);
  } else {
    if (std::abs(z0.coeffs[params.target - 1]) <= 1e-12) {
      const auto ex = excite_from_orthogonal(z0, b, ctx.tables, params, SteeringOptions{}.excitation_budget);
      a.result["excitation"] = {{"source_mode", ex.source_mode}, {"duration", ex.control.duration()}};
      z0 = ex.state;
    }
    rec = closed_loop(z0, b, ctx.tables, params, cfg.control.horizon);
  }
  a.result.update(closed_loop_summary(rec));
  a.result["alpha_admissible"] =
      check_alpha_admissible(b, params.alpha, b.truncation(), cfg.conditions.coupling_tol).passed();
  a.files.emplace_back("trajectory.csv", io::to_csv(io::closed_loop_table(rec, cfg.control.sample_every)));
  a.files.emplace_back("plot.svg", lyapunov_plot(rec, cubic ? "cubic closed loop" : "closed loop"));
  if (rec.blow_up) throw NumericalError("closed loop: H^2 norm exceeded the blow-up threshold");
  return a;
}

inline Artifacts run_steer(const ExperimentConfig& cfg, const ExperimentContext& ctx) {
  const auto& b = ctx.basis;
  const auto z0 = parse_state(cfg.control.initial, b.truncation(), cfg.seed);
  const auto z1 = parse_state(cfg.control.final, b.truncation(), derive_seed(cfg.seed, 1, 0));
  SteeringOptions opts;
  opts.max_time = cfg.control.max_time;
  const auto r = steer(z0, z1, b, ctx.tables, feedback_params(cfg), cfg.control.eps, cfg.control.budget, opts);
  Artifacts a;
  a.result = {{"k0", r.forward_duration}, {"k1", r.backward_duration}, {"eps", cfg.control.eps},
              {"achieved", r.achieved},    {"sup_u", r.sup_u},           {"delta", r.delta},
              {"duration", r.control.duration()}};
  a.manifest_extra["steering"] = {{"k0", r.forward_duration},
                                  {"k1", r.backward_duration},
                                  {"eps", cfg.control.eps},
                                  {"achieved", r.achieved},
                                  {"sup_u", r.sup_u}};
  auto table = io::control_table(r.control);
  a.files.emplace_back("control.csv", io::to_csv(table));
  a.files.emplace_back("plot.svg", io::svg_line_plot({"steering control", "t", "u", false}, {{"u(t)", table.columns[0], table.columns[1]}}));
  return a;
}

inline Artifacts run_random_growth(const ExperimentConfig& cfg, const ExperimentContext& ctx) {
  const auto& s = cfg.stochastic;
  const auto& b = ctx.basis;
  const auto model = amplitude_model(cfg);
  const auto z0 = parse_state(s.initial, b.truncation(), cfg.seed);
  StoppingConfig stop;
  stop.s = s.stopping_s;
  stop.radius = s.radius_factor * sobolev_norm(z0, -s.stopping_s, b);
  stop.max_steps = s.max_steps;
  const auto tail = tail_statistics(z0, model, stop, s.n_max, s.block, s.paths, cfg.seed, b, ctx.tables);
  const auto growth = growth_report(z0, model, s.growth_steps, s.growth_s, s.growth_paths, cfg.seed, b, ctx.tables);

  Artifacts a;
  a.result["config_hash"] = hex64(config_hash(cfg));
  a.result["paths"] = tail.paths;
  a.result["finite"] = tail.finite;
  a.result["censored"] = tail.censored;
  a.result["radius"] = stop.radius;
  a.result["block"] = tail.block;
  a.result["max_steps"] = tail.max_steps;
  nlohmann::json tj = nlohmann::json::array();
  for (const auto& p : tail.tail) tj.push_back({{"n", p.n}, {"p_hat", p.p_hat}, {"stderr", p.std_error}});
  a.result["tail"] = tj;
  a.result["log_slope"] = tail.log_slope ? nlohmann::json(*tail.log_slope) : nlohmann::json(nullptr);
  a.result["log_slope_stderr"] = tail.log_slope_stderr ? nlohmann::json(*tail.log_slope_stderr) : nlohmann::json(nullptr);
  a.result["degenerate"] = tail.degenerate;
  a.result["growth"] = {{"paths", growth.paths},           {"steps", growth.steps},
                        {"s", growth.s},                   {"checkpoints", growth.checkpoints},
                        {"median_G", growth.median_G},     {"median_L", growth.median_L},
                        {"growth_factor", growth.median_G.back() / growth.median_G.front()}};

  io::Table tail_table{{"n", "p_hat", "stderr"}, std::vector<std::vector<double>>(3)};
  for (const auto& p : tail.tail) {
    tail_table.columns[0].push_back(p.n);
    tail_table.columns[1].push_back(p.p_hat);
    tail_table.columns[2].push_back(p.std_error);
  }
  a.files.emplace_back("tail.csv", io::to_csv(tail_table));

  io::Table gt{{"k", "median_G", "median_L"}, std::vector<std::vector<double>>(3)};
  for (int k = 0; k <= growth.steps; ++k) {
    std::vector<double> gs, ls;
    for (int i = 0; i < growth.paths; ++i) {
      gs.push_back(growth.running_max[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
      ls.push_back(growth.running_min[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
    }
    gt.columns[0].push_back(k);
    gt.columns[1].push_back(median(std::move(gs)));
    gt.columns[2].push_back(median(std::move(ls)));
  }
  a.files.emplace_back("growth.csv", io::to_csv(gt));

  if (s.per_path_csv) {
    io::Table pt{{"path", "tau", "censored"}, std::vector<std::vector<double>>(3)};
    for (int i = 0; i < tail.paths; ++i) {
      const int tau = tail.entrance_times[static_cast<std::size_t>(i)];
      pt.columns[0].push_back(i);
      pt.columns[1].push_back(tau);
      pt.columns[2].push_back(tau >= tail.max_steps ? 1.0 : 0.0);
    }
    a.files.emplace_back("entrance_times.csv", io::to_csv(pt));
  }
  a.files.emplace_back("plot.svg", io::svg_line_plot({"entrance-time survival", "n", "P(tau > n block)", true},
                                                     {{"p_hat", tail_table.columns[0], tail_table.columns[1]}}));
  if (tail.degenerate) throw NumericalError("random-growth: every path was censored");
  return a;
}

inline Artifacts run_linearized_probe(const ExperimentConfig& cfg, const ExperimentContext& ctx) {
  const auto& b = ctx.basis;
  const int p = cfg.control.probe_source;
  const int l = cfg.control.probe_mode;
  const double dt = cfg.control.dt;
  const double omega = b.lambda(p) - b.lambda(l);
  const auto steps = static_cast<std::size_t>(std::llround(1.0 / dt));
  const auto u = ControlSignal::sample(dt, steps, [&](double t) { return std::cos(omega * t); });
  const Complex lin = linearized_response(p, l, u, b);
  const auto map = linearized_map(p, l, b, dt);

  Artifacts a;
  a.result["source_mode"] = p;
  a.result["probe_mode"] = l;
  a.result["closed_form"] = complex_json(lin);
  a.result["rank"] = map.rank;
  a.result["singular_values"] = {map.singular_values[0], map.singular_values[1]};
  std::vector<double> amps, errs;
  nlohmann::json sweep = nlohmann::json::array();
  for (double factor : {10.0, 1.0, 0.1}) {
    const double amp = cfg.control.probe_amplitude * factor;
    ControlSignal ua = u;
    for (auto& v : ua.values) v *= amp;
    const auto r = propagate_cubic(QuantumState::eigenstate(b.truncation(), p), ua, b, ctx.tables);
    const Complex got = r.state.coeffs[l - 1];
    const double rel = std::abs(got - amp * lin) / std::abs(amp * lin);
    sweep.push_back({{"amplitude", amp}, {"response", complex_json(got)}, {"relative_error", rel}});
    amps.push_back(amp);
    errs.push_back(rel);
    if (factor == 1.0) a.result["relative_error"] = rel;
  }
  a.result["sweep"] = sweep;
  io::Table t{{"amplitude", "relative_error"}, {amps, errs}};
  a.files.emplace_back("probe.csv", io::to_csv(t));
  a.files.emplace_back("plot.svg", io::svg_line_plot({"linearization error", "amplitude", "relative error", true},
                                                     {{"error", amps, errs}}));
  return a;
}

inline Artifacts dispatch(const ExperimentConfig& cfg, const ExperimentContext& ctx) {
  const auto& c = cfg.command;
  if (c == "spectrum") return run_spectrum(cfg, ctx);
  if (c == "check-conditions") return run_check_conditions(cfg, ctx);
  if (c == "stabilize") return run_stabilize(cfg, ctx, false);
  if (c == "nonlinear-stabilize") return run_stabilize(cfg, ctx, true);
  if (c == "steer") return run_steer(cfg, ctx);
  if (c == "random-growth") return run_random_growth(cfg, ctx);
  if (c == "linearized-probe") return run_linearized_probe(cfg, ctx);
  throw ConfigError("unknown command '" + c + "'");
}

inline bool is_validation_error(const std::exception& e) {
  return dynamic_cast<const InputError*>(&e) || dynamic_cast<const ResolutionError*>(&e) ||
         dynamic_cast<const TruncationError*>(&e) || dynamic_cast<const ResourceError*>(&e);
}

}  // namespace detail

/// Writes only error.json into `output_dir`; used when a config cannot even
/// be parsed.
inline RunResult report_validation_error(const std::string& output_dir, const std::string& message) {
  io::StagedDirectory out(output_dir.empty() ? std::string("out") : output_dir);
  out.write("error.json", detail::dump({{"status", "validation_error"}, {"message", message}}));
  out.commit();
  return {kExitValidation, message};
}

/// Executes cfg.command. Exit 0 on success, 2 on a validation error (only
/// error.json is written), 3 on numerical failure or timeout (manifest.json
/// carries the details).
inline RunResult run(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  nlohmann::json manifest;
  manifest["tool"] = "schro";
  manifest["versions"] = {{"schro", kVersion},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                        "." + std::to_string(EIGEN_MINOR_VERSION)},
                          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                          {"cxx", static_cast<long>(__cplusplus)}};
  manifest["command"] = cfg.command;
  manifest["seed"] = cfg.seed;
  manifest["config"] = config_json(cfg);
  manifest["config_text"] = cfg.serialize();
  manifest["config_hash"] = hex64(config_hash(cfg));

  auto write_error = [&](int code, const std::exception& e, const char* kind) {
    if (log) *log << "schro: " << kind << ": " << e.what() << "\n";
    try {
      io::StagedDirectory out(cfg.output_dir.empty() ? std::string("out") : cfg.output_dir);
      if (code == kExitValidation) {
        out.write("error.json", detail::dump({{"status", "validation_error"}, {"message", e.what()}}));
      } else {
        manifest["status"] = kind;
        manifest["error"] = e.what();
        if (auto* t = dynamic_cast<const TimeoutError*>(&e)) manifest["best_distance"] = t->best();
        manifest["wall_time_seconds"] = elapsed();
        manifest["outputs"] = nlohmann::json::array();
        out.write("manifest.json", detail::dump(manifest));
      }
      out.commit();
    } catch (const std::exception& io_error) {
      if (log) *log << "schro: could not write error report: " << io_error.what() << "\n";
    }
    return RunResult{code, e.what()};
  };

  try {
    validate_config(cfg);
  } catch (const std::exception& e) {
    return write_error(kExitValidation, e, "validation_error");
  }

  Artifacts art;
  try {
    const auto ctx = build_context(cfg);
    if (log) *log << "schro: " << cfg.command << " with M = " << ctx.basis.truncation() << "\n";
    art = detail::dispatch(cfg, ctx);
  } catch (const NumericalError& e) {
    return write_error(kExitNumerical, e, dynamic_cast<const TimeoutError*>(&e) ? "timeout" : "numerical_failure");
  } catch (const std::exception& e) {
    if (detail::is_validation_error(e)) return write_error(kExitValidation, e, "validation_error");
    return write_error(kExitNumerical, e, "numerical_failure");
  }

  try {
    io::StagedDirectory out(cfg.output_dir);
    out.write("result.json", detail::dump(art.result));
    for (const auto& [name, content] : art.files) out.write(name, content);
    manifest["status"] = "ok";
    manifest.update(art.manifest_extra);
    manifest["outputs"] = out.files();
    manifest["wall_time_seconds"] = elapsed();
    out.write("manifest.json", detail::dump(manifest));
    out.commit();
  } catch (const std::exception& e) {
    return write_error(kExitNumerical, e, "io_failure");
  }
  if (log) *log << "schro: wrote " << cfg.output_dir << " in " << elapsed() << " s\n";
  return {kExitOk, {}};
}

}  // namespace schro
