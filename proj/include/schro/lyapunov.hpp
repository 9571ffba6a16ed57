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

// Lyapunov feedback stabilization of an eigenstate e_i:
//
//   V_i(z) = alpha * sum_{j != i} lambda_j^2 |c_j|^2 + 1 - |c_i|^2,
//   u(z)   = -delta * Im( alpha * sum_{j != i} lambda_j^2 w_j conj(c_j) - w_i conj(c_i) ),  w = B c,
//
// so that along the continuous closed loop dV/dt = -(2/delta) u^2. The
// implementation holds u constant over `hold_steps` propagator steps.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include "schro/error.hpp"
#include "schro/propagator.hpp"
#include "schro/spectral_core.hpp"

namespace schro {

struct FeedbackParams {
  double alpha = 0.1;
  double delta = 0.5;
  int target = 1;       // mode number i of the stabilized eigenstate
  int hold_steps = 1;   // sample-and-hold interval in propagator steps
  double stop_threshold = 1e-4;
  bool adapt_delta = true;  // halve delta for a hold interval that would increase V

  void validate(int truncation) const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InputError("feedback: alpha must be positive");
    if (!(delta > 0.0) || !std::isfinite(delta)) throw InputError("feedback: delta must be positive");
    if (target < 1 || target > truncation) throw InputError("feedback: target mode out of range");
    if (hold_steps < 1) throw InputError("feedback: hold_steps must be positive");
    if (!(stop_threshold >= 0.0)) throw InputError("feedback: stop_threshold must be non-negative");
  }
};

/// Per-step tolerance on Lyapunov increase: 1e-8 (1 + |V|).
inline double lyapunov_slack(double v) { return 1e-8 * (1.0 + std::abs(v)); }

inline double lyapunov_value(const ComplexVector& c, const RealVector& lambda, double alpha, int target) {
  double high = 0.0;
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    if (j == target - 1) continue;
    high += lambda[j] * lambda[j] * std::norm(c[j]);
  }
  return alpha * high + 1.0 - std::norm(c[target - 1]);
}

inline double lyapunov_value(const QuantumState& state, const SpectralBasis& basis, double alpha, int target) {
  if (state.size() != basis.truncation()) throw InputError("lyapunov_value: dimension mismatch");
  if (target < 1 || target > basis.truncation()) throw InputError("lyapunov_value: target out of range");
  return lyapunov_value(state.coeffs, basis.eigenvalues, alpha, target);
}

/// Im( alpha * sum_{j != i} lambda_j^2 w_j conj(c_j) - w_i conj(c_i) ); the
/// feedback is -delta times this and dV/dt = 2 u * this for any control u.
inline double lyapunov_pairing(const ComplexVector& c, const ComplexVector& w, const RealVector& lambda, double alpha,
                               int target) {
  Complex high = 0.0;
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    if (j == target - 1) continue;
    high += lambda[j] * lambda[j] * w[j] * std::conj(c[j]);
  }
  const Complex low = w[target - 1] * std::conj(c[target - 1]);
  return (alpha * high - low).imag();
}

inline double feedback_gain(const ComplexVector& c, const SpectralBasis& basis, const FeedbackParams& params) {
  const ComplexVector w = basis.coupling * c;
  return -params.delta * lyapunov_pairing(c, w, basis.eigenvalues, params.alpha, params.target);
}

inline double feedback_gain(const QuantumState& state, const SpectralBasis& basis, const FeedbackParams& params) {
  if (state.size() != basis.truncation()) throw InputError("feedback_gain: dimension mismatch");
  return feedback_gain(state.coeffs, basis, params);
}

struct ClosedLoopRecord {
  std::vector<double> times;
  std::vector<double> lyapunov;
  std::vector<double> control;  // value held on [t_k, t_{k+1}); last row is u at the final state
  std::vector<double> target_population;
  std::vector<double> norm_l2;
  std::vector<double> norm_h2;
  std::vector<double> dissipation;  // running sum of (2/delta) * u^2 * hold

  ControlSignal applied;  // the micro-step control actually used
  QuantumState final_state;
  double final_delta = 0.0;
  int delta_halvings = 0;
  bool hypothesis_warning = false;  // <z0,e_i> = 0 or V(z0) outside (0, 1)
  bool converged = false;           // V dropped to stop_threshold
  bool blow_up = false;

  std::size_t rows() const noexcept { return times.size(); }
};

namespace detail {

/// Sample-and-hold closed loop shared by the linear and cubic equations.
/// `advance(c, u, steps)` propagates c in place with constant control u;
/// `pairing(c)` returns Im(...) so that u = -delta * pairing(c).
template <typename Advance, typename Pairing>
ClosedLoopRecord run_closed_loop(const QuantumState& state0, const SpectralBasis& basis, const FeedbackParams& params,
                                 double dt, double horizon, Advance&& advance, Pairing&& pairing) {
  params.validate(basis.truncation());
  if (state0.size() != basis.truncation()) throw InputError("closed_loop: dimension mismatch");
  if (!(horizon >= 0.0)) throw InputError("closed_loop: horizon must be non-negative");

  constexpr int kMaxHalvings = 40;
  const RealVector& lambda = basis.eigenvalues;
  const double hold = dt * params.hold_steps;
  const auto intervals = static_cast<std::size_t>(std::ceil(horizon / hold - 1e-9));

  ClosedLoopRecord rec;
  rec.applied.dt = dt;
  ComplexVector c = state0.coeffs;
  double delta = params.delta;  // halved locally for an interval that would overshoot
  double v = lyapunov_value(c, lambda, params.alpha, params.target);
  const double overlap = std::abs(c[params.target - 1]);
  rec.hypothesis_warning = overlap == 0.0 || !(v > 0.0 && v < 1.0);

  double dissipated = 0.0;
  auto push_row = [&](double t, double u) {
    QuantumState s{c};
    rec.times.push_back(t);
    rec.lyapunov.push_back(v);
    rec.control.push_back(u);
    rec.target_population.push_back(std::norm(c[params.target - 1]));
    rec.norm_l2.push_back(c.norm());
    rec.norm_h2.push_back(sobolev_norm(s, 2.0, basis));
    rec.dissipation.push_back(dissipated);
  };

  std::size_t k = 0;
  for (; k < intervals && v > params.stop_threshold; ++k) {
    const double signal = pairing(c);
    delta = params.delta;
    double u = -delta * signal;
    ComplexVector next = c;
    advance(next, u, params.hold_steps);
    double v_next = lyapunov_value(next, lambda, params.alpha, params.target);
    for (int halvings = 0; params.adapt_delta && v_next > v + lyapunov_slack(v); ++halvings) {
      if (halvings == kMaxHalvings) {
        // Free drift leaves V unchanged.
        u = 0.0;
        next = c;
        advance(next, u, params.hold_steps);
        v_next = lyapunov_value(next, lambda, params.alpha, params.target);
        break;
      }
      delta *= 0.5;
      ++rec.delta_halvings;
      u = -delta * signal;
      next = c;
      advance(next, u, params.hold_steps);
      v_next = lyapunov_value(next, lambda, params.alpha, params.target);
    }
    if (!next.allFinite()) throw NumericalError("closed_loop: non-finite state");
    push_row(static_cast<double>(k) * hold, u);
    rec.applied.values.insert(rec.applied.values.end(), static_cast<std::size_t>(params.hold_steps), u);
    dissipated += 2.0 / delta * u * u * hold;
    c = std::move(next);
    v = v_next;
  }
  push_row(static_cast<double>(k) * hold, -params.delta * pairing(c));
  rec.final_state = QuantumState{std::move(c)};
  rec.final_delta = delta;
  rec.converged = v <= params.stop_threshold;
  return rec;
}

}  // namespace detail

/// Closed loop of the linear equation with sample-and-hold feedback until
/// `horizon` or V <= stop_threshold. The tables' dt is the micro-step.
inline ClosedLoopRecord closed_loop(const QuantumState& state0, const SpectralBasis& basis,
                                    const PropagatorTables& tables, const FeedbackParams& params, double horizon) {
  ComplexVector work(basis.truncation());
  auto advance = [&](ComplexVector& c, double u, int steps) {
    for (int s = 0; s < steps; ++s) tables.step(c, u, work);
  };
  auto pairing = [&](const ComplexVector& c) {
    const ComplexVector w = basis.coupling * c;
    return lyapunov_pairing(c, w, basis.eigenvalues, params.alpha, params.target);
  };
  return detail::run_closed_loop(state0, basis, params, tables.dt(), horizon, advance, pairing);
}

/// Feedback u(U_t(z0, 0)) sampled along the free drift at `samples` evenly
/// spaced times in [0, horizon]. Identically zero traces signal invariant
/// zero dynamics of the feedback.
inline std::vector<double> free_drift_feedback(const QuantumState& state0, const SpectralBasis& basis,
                                               const FeedbackParams& params, double horizon, int samples) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(samples));
  for (int k = 0; k < samples; ++k) {
    const double t = samples > 1 ? horizon * k / (samples - 1) : 0.0;
    ComplexVector c = state0.coeffs;
    for (Eigen::Index j = 0; j < c.size(); ++j) c[j] *= std::polar(1.0, -basis.eigenvalues[j] * t);
    out.push_back(feedback_gain(c, basis, params));
  }
  return out;
}

struct ExcitationResult {
  ControlSignal control;
  QuantumState state;
  int source_mode = 0;  // dominant occupied mode p the pulse resonates from
};

/// Moves population into the (empty) target mode with a resonant pulse
/// u(t) = a cos((lambda_p - lambda_i) t), a = budget/2, from the dominant
/// occupied mode p coupled to the target. The pulse length maximizing
/// |<z, e_i>| over a few Rabi-free periods is kept.
inline ExcitationResult excite_from_orthogonal(const QuantumState& state0, const SpectralBasis& basis,
                                               const PropagatorTables& tables, const FeedbackParams& params,
                                               double budget) {
  params.validate(basis.truncation());
  if (!(budget > 0.0)) throw InputError("excite_from_orthogonal: budget must be positive");
  const int i = params.target;
  if (std::abs(state0.coeffs[i - 1]) > 1e-12)
    throw InputError("excite_from_orthogonal: state already overlaps the target mode");

  int source = 0;
  double best_weight = 0.0;
  for (int p = 1; p <= basis.truncation(); ++p) {
    if (p == i || std::abs(basis.coupling(i - 1, p - 1)) <= 1e-10) continue;
    const double weight = std::norm(state0.coeffs[p - 1]);
    if (weight > best_weight) {
      best_weight = weight;
      source = p;
    }
  }
  if (source == 0) throw NumericalError("excite_from_orthogonal: no coupling path to the target mode");

  const double omega = basis.lambda(source) - basis.lambda(i);
  const double amplitude = 0.5 * budget;
  const double dt = tables.dt();
  const double window = std::max(1.0, 8.0 * std::numbers::pi / std::abs(omega));
  const auto steps = static_cast<std::size_t>(std::ceil(window / dt));
  const ControlSignal pulse = ControlSignal::sample(dt, steps, [&](double t) { return amplitude * std::cos(omega * t); });

  std::size_t best_step = 0;
  double best_overlap = -1.0;
  propagate(state0, pulse, tables, [&](std::size_t step, const ComplexVector& c) {
    const double overlap = std::abs(c[i - 1]);
    if (step > 0 && overlap > best_overlap) {
      best_overlap = overlap;
      best_step = step;
    }
  });
  ExcitationResult out;
  out.control = pulse.slice(0, best_step);
  out.state = propagate(state0, out.control, tables);
  out.source_mode = source;
  if (!(std::abs(out.state.coeffs[i - 1]) > 1e-6))
    throw NumericalError("excite_from_orthogonal: pulse failed to populate the target mode");
  return out;
}

}  // namespace schro
