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

// Randomly forced equation: on every unit interval [k, k+1) the control is
// an independent copy of eta(t) = sum_j b_j xi_j g_j(t), with {g_j} the
// orthonormal Fourier family on [0, 1] and xi_j i.i.d. with unit variance.
// The integer-time states form a Markov chain; this module simulates it
// and collects first-entrance times into H^{-s} balls and running extrema
// of Sobolev norms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "schro/error.hpp"
#include "schro/propagator.hpp"
#include "schro/random.hpp"
#include "schro/spectral_core.hpp"

namespace schro {

enum class NoiseFamily { gaussian, logistic };

inline std::string to_string(NoiseFamily f) { return f == NoiseFamily::gaussian ? "gaussian" : "logistic"; }

inline NoiseFamily parse_noise_family(const std::string& name) {
  if (name == "gaussian") return NoiseFamily::gaussian;
  if (name == "logistic") return NoiseFamily::logistic;
  throw InputError("noise family must be gaussian or logistic, got '" + name + "'");
}

/// g_1 = 1, g_{2m} = sqrt(2) cos(2 pi m t), g_{2m+1} = sqrt(2) sin(2 pi m t).
inline double fourier_mode(int j, double t) {
  if (j == 1) return 1.0;
  const int m = j / 2;
  const double arg = 2.0 * std::numbers::pi * m * t;
  return std::numbers::sqrt2 * (j % 2 == 0 ? std::cos(arg) : std::sin(arg));
}

struct RandomAmplitudeModel {
  std::vector<double> b;  // b_1..b_J
  NoiseFamily noise = NoiseFamily::gaussian;

  int truncation() const noexcept { return static_cast<int>(b.size()); }

  /// b_j = scale * j^(-exponent), j = 1..terms.
  static RandomAmplitudeModel power_law(int terms = 16, double scale = 1.0, double exponent = 2.0,
                                        NoiseFamily noise = NoiseFamily::gaussian) {
    if (terms < 1) throw InputError("random amplitude: need at least one term");
    RandomAmplitudeModel m;
    m.noise = noise;
    for (int j = 1; j <= terms; ++j) m.b.push_back(scale * std::pow(static_cast<double>(j), -exponent));
    return m;
  }

  void validate() const {
    if (b.empty()) throw InputError("random amplitude: empty coefficient list");
    for (double x : b)
      if (!(x >= 0.0) || !std::isfinite(x)) throw InputError("random amplitude: coefficients must be finite and >= 0");
  }

  double energy() const {
    double e = 0.0;
    for (double x : b) e += x * x;
    return e;
  }
};

/// One unit-variance draw from the model's noise family.
inline double draw_noise(NoiseFamily family, Rng& rng) {
  if (family == NoiseFamily::gaussian) return std::normal_distribution<double>(0.0, 1.0)(rng);
  // Logistic with scale sqrt(3)/pi has unit variance.
  double u = 0.0;
  do u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  while (u <= 0.0 || u >= 1.0);
  return std::sqrt(3.0) / std::numbers::pi * std::log(u / (1.0 - u));
}

/// eta on [0, 1) sampled at the midpoints of the dt grid; 1/dt must be an integer.
inline ControlSignal sample_eta(const RandomAmplitudeModel& model, double dt, Rng& rng) {
  model.validate();
  const auto steps = static_cast<std::size_t>(std::llround(1.0 / dt));
  if (steps == 0 || std::abs(static_cast<double>(steps) * dt - 1.0) > 1e-9)
    throw InputError("sample_eta: 1/dt must be an integer");
  std::vector<double> xi(model.b.size());
  for (auto& x : xi) x = draw_noise(model.noise, rng);
  return ControlSignal::sample(dt, steps, [&](double t) {
    double v = 0.0;
    for (std::size_t j = 0; j < xi.size(); ++j)
      if (model.b[j] != 0.0) v += model.b[j] * xi[j] * fourier_mode(static_cast<int>(j + 1), t);
    return v;
  });
}

/// L^2[0,1] norm of a piecewise-constant signal.
inline double l2_norm(const ControlSignal& u) {
  double acc = 0.0;
  for (double v : u.values) acc += v * v;
  return std::sqrt(acc * u.dt);
}

struct ChainOptions {
  bool keep_states = false;
  bool keep_etas = false;
};

struct ChainTrajectory {
  std::vector<double> norm_pos;  // ||z_k||_s, k = 0..K
  std::vector<double> norm_neg;  // ||z_k||_{-s}
  std::vector<double> norm_l2;
  std::vector<QuantumState> states;
  std::vector<ControlSignal> etas;  // eta_k drives z_k -> z_{k+1}
};

/// z_{k+1} = U_1(z_k, eta_k) for k < K with a fresh eta_k per unit interval.
inline ChainTrajectory simulate_chain(const QuantumState& z0, const RandomAmplitudeModel& model, int steps,
                                      const SpectralBasis& basis, const PropagatorTables& tables, Rng& rng, double s,
                                      const ChainOptions& options = {}) {
  if (steps < 0) throw InputError("simulate_chain: negative step count");
  if (std::abs(z0.norm() - 1.0) > 1e-8) throw InputError("simulate_chain: initial state must be unit");
  ChainTrajectory out;
  QuantumState z = z0;
  auto record = [&](const QuantumState& state) {
    out.norm_pos.push_back(sobolev_norm(state, s, basis));
    out.norm_neg.push_back(sobolev_norm(state, -s, basis));
    out.norm_l2.push_back(state.norm());
    if (options.keep_states) out.states.push_back(state);
  };
  record(z);
  for (int k = 0; k < steps; ++k) {
    ControlSignal eta = sample_eta(model, tables.dt(), rng);
    z = propagate(z, eta, tables);
    record(z);
    if (options.keep_etas) out.etas.push_back(std::move(eta));
  }
  return out;
}

struct StoppingConfig {
  double radius = 0.5;  // r of the ball B_{H^{-s}}(0, r)
  double s = 1.0;
  int max_steps = 500;  // censoring horizon K_max

  void validate() const {
    if (!(radius > 0.0)) throw InputError("stopping: radius must be positive");
    if (!(s > 0.0)) throw InputError("stopping: s must be positive");
    if (max_steps < 0) throw InputError("stopping: max_steps must be non-negative");
  }
};

struct EntranceTime {
  int steps = 0;
  bool censored = false;  // no entrance up to max_steps; steps == max_steps
};

/// First integer k <= K_max with ||z_k||_{-s} < r.
inline EntranceTime first_entrance_time(const QuantumState& z0, const RandomAmplitudeModel& model,
                                        const StoppingConfig& stopping, const SpectralBasis& basis,
                                        const PropagatorTables& tables, Rng& rng) {
  stopping.validate();
  QuantumState z = z0;
  for (int k = 0;; ++k) {
    if (sobolev_norm(z, -stopping.s, basis) < stopping.radius) return {k, false};
    if (k == stopping.max_steps) return {k, true};
    z = propagate(z, sample_eta(model, tables.dt(), rng), tables);
  }
}

namespace detail {

/// Runs body(i) for i in [0, count) on a few worker threads. Results must
/// be written to per-index slots so the outcome is schedule independent.
template <typename Body>
void parallel_for(int count, Body&& body) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int workers = static_cast<int>(std::min<unsigned>(hw, static_cast<unsigned>(std::max(count, 1))));
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < count; i += workers) body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline void check_stream_seeds(std::uint64_t base_seed, int paths, std::uint64_t tag) {
  std::set<std::uint64_t> seen;
  for (int i = 0; i < paths; ++i)
    if (!seen.insert(derive_seed(base_seed, static_cast<std::uint64_t>(i), tag)).second)
      throw NumericalError("stochastic: derived seed collision between paths");
}

}  // namespace detail

inline constexpr std::uint64_t kEntranceStreamTag = 0x7461696c;  // "tail"
inline constexpr std::uint64_t kGrowthStreamTag = 0x67726f77;    // "grow"

struct TailPoint {
  int n = 0;
  double p_hat = 0.0;   // fraction of paths with tau > n * block
  double std_error = 0.0;  // binomial standard error
};

struct TailReport {
  int paths = 0;
  int finite = 0;
  int censored = 0;
  int block = 1;
  int max_steps = 0;
  std::vector<int> entrance_times;  // per path, in path order; censored paths hold max_steps
  std::vector<TailPoint> tail;
  std::optional<double> log_slope;  // least-squares slope of log p_hat(n)
  std::optional<double> log_slope_stderr;
  bool degenerate = false;  // every path censored
};

/// Empirical survival curve P{tau > n * block}, n = 0..n_max, from
/// independent paths (path i uses stream i of base_seed).
inline TailReport tail_statistics(const QuantumState& z0, const RandomAmplitudeModel& model,
                                  const StoppingConfig& stopping, int n_max, int block, int paths,
                                  std::uint64_t base_seed, const SpectralBasis& basis,
                                  const PropagatorTables& tables) {
  stopping.validate();
  if (paths < 50) throw InputError("tail_statistics: need at least 50 paths");
  if (block < 1 || n_max < 0) throw InputError("tail_statistics: block must be positive and n_max non-negative");
  if (static_cast<long>(n_max) * block > stopping.max_steps)
    throw InputError("tail_statistics: n_max * block exceeds the censoring horizon");
  detail::check_stream_seeds(base_seed, paths, kEntranceStreamTag);

  std::vector<EntranceTime> results(static_cast<std::size_t>(paths));
  detail::parallel_for(paths, [&](int i) {
    Rng rng = make_stream(base_seed, static_cast<std::uint64_t>(i), kEntranceStreamTag);
    results[static_cast<std::size_t>(i)] = first_entrance_time(z0, model, stopping, basis, tables, rng);
  });

  TailReport out;
  out.paths = paths;
  out.block = block;
  out.max_steps = stopping.max_steps;
  for (const auto& r : results) {
    out.entrance_times.push_back(r.steps);
    if (r.censored) ++out.censored; else ++out.finite;
  }
  out.degenerate = out.finite == 0;

  std::vector<double> xs, ys;
  for (int n = 0; n <= n_max; ++n) {
    const long threshold = static_cast<long>(n) * block;
    int survivors = 0;
    for (const auto& r : results)
      if (r.censored || r.steps > threshold) ++survivors;
    const double p = static_cast<double>(survivors) / paths;
    out.tail.push_back({n, p, std::sqrt(p * (1.0 - p) / paths)});
    if (p > 0.0) {
      xs.push_back(n);
      ys.push_back(std::log(p));
    }
  }
  if (xs.size() >= 2) {
    const double m = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      mx += xs[k] / m;
      my += ys[k] / m;
    }
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      sxx += (xs[k] - mx) * (xs[k] - mx);
      sxy += (xs[k] - mx) * (ys[k] - my);
    }
    const double slope = sxy / sxx;
    out.log_slope = slope;
    if (xs.size() >= 3) {
      double rss = 0.0;
      for (std::size_t k = 0; k < xs.size(); ++k) {
        const double r = ys[k] - (my + slope * (xs[k] - mx));
        rss += r * r;
      }
      out.log_slope_stderr = std::sqrt(rss / (m - 2.0) / sxx);
    }
  }
  return out;
}

struct GrowthReport {
  int paths = 0;
  int steps = 0;
  double s = 0.0;
  std::vector<int> checkpoints;  // K/10, K/2, K
  std::vector<double> median_G;  // median over paths of max_{m <= k} ||z_m||_s
  std::vector<double> median_L;  // median over paths of min_{m <= k} ||z_m||_{-s}
  std::vector<std::vector<double>> running_max;  // per path, k = 0..K
  std::vector<std::vector<double>> running_min;
};

inline double median(std::vector<double> v) {
  if (v.empty()) throw InputError("median: empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Running extrema of ||z_k||_s and ||z_k||_{-s} along independent chains
/// with medians at k = K/10, K/2, K.
inline GrowthReport growth_report(const QuantumState& z0, const RandomAmplitudeModel& model, int steps, double s,
                                  int paths, std::uint64_t base_seed, const SpectralBasis& basis,
                                  const PropagatorTables& tables) {
  if (!(s > 0.0)) throw InputError("growth_report: s must be positive");
  if (paths < 1 || steps < 1) throw InputError("growth_report: need at least one path and one step");
  detail::check_stream_seeds(base_seed, paths, kGrowthStreamTag);

  GrowthReport out;
  out.paths = paths;
  out.steps = steps;
  out.s = s;
  out.running_max.resize(static_cast<std::size_t>(paths));
  out.running_min.resize(static_cast<std::size_t>(paths));
  detail::parallel_for(paths, [&](int i) {
    Rng rng = make_stream(base_seed, static_cast<std::uint64_t>(i), kGrowthStreamTag);
    const auto chain = simulate_chain(z0, model, steps, basis, tables, rng, s);
    auto& g = out.running_max[static_cast<std::size_t>(i)];
    auto& l = out.running_min[static_cast<std::size_t>(i)];
    g.resize(chain.norm_pos.size());
    l.resize(chain.norm_neg.size());
    for (std::size_t k = 0; k < chain.norm_pos.size(); ++k) {
      g[k] = k == 0 ? chain.norm_pos[k] : std::max(g[k - 1], chain.norm_pos[k]);
      l[k] = k == 0 ? chain.norm_neg[k] : std::min(l[k - 1], chain.norm_neg[k]);
    }
  });

  out.checkpoints = {std::max(1, steps / 10), std::max(1, steps / 2), steps};
  for (int k : out.checkpoints) {
    std::vector<double> gs, ls;
    for (int i = 0; i < paths; ++i) {
      gs.push_back(out.running_max[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
      ls.push_back(out.running_min[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]);
    }
    out.median_G.push_back(median(std::move(gs)));
    out.median_L.push_back(median(std::move(ls)));
  }
  return out;
}

/// Monte Carlo estimate of P{ ||target - eta||_{L^2[0,1]} < eps }.
inline double support_probe(const RandomAmplitudeModel& model, const ControlSignal& target, double eps, int samples,
                            std::uint64_t seed) {
  if (samples < 1) throw InputError("support_probe: need at least one sample");
  if (std::abs(target.duration() - 1.0) > 1e-9) throw InputError("support_probe: target must live on [0, 1]");
  Rng rng(seed);
  int hits = 0;
  for (int k = 0; k < samples; ++k) {
    const auto eta = sample_eta(model, target.dt, rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < eta.steps(); ++i) acc += (eta.values[i] - target.values[i]) * (eta.values[i] - target.values[i]);
    if (std::sqrt(acc * target.dt) < eps) ++hits;
  }
  return static_cast<double>(hits) / samples;
}

}  // namespace schro
