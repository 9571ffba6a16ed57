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

// Approximate steering between unit states: stabilize the initial state to
// the target eigenstate, stabilize the conjugated final state, time-reverse
// the second control and concatenate. Free drift over whole time units
// aligns the residual phase of the eigenstate component.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>

#include "schro/error.hpp"
#include "schro/lyapunov.hpp"
#include "schro/propagator.hpp"
#include "schro/spectral_core.hpp"

namespace schro {

struct SteeringOptions {
  double max_time = 200.0;           // closed-loop time budget per stabilization
  long max_phase_steps = 100000;     // integer drift steps searched for phase alignment
  int extra_epochs = 3;              // additional closed-loop units tried when alignment fails
  double excitation_budget = 1.0;    // pulse amplitude budget when <z0, e_i> = 0
  double min_delta = 1e-6;           // smallest gain tried when meeting an amplitude budget
};

struct StabilizationResult {
  ControlSignal control;
  QuantumState final_state;
  double distance = 0.0;   // || U(z0, control) - e_target ||
  Complex phase = 1.0;     // c_target / |c_target| at the end of the closed loop
  long closed_loop_units = 0;
  long drift_units = 0;
  bool phase_aligned = true;
};

namespace detail {

/// || c - e^{i arg c_t} e_t ||: distance to the phase circle of e_t.
inline double distance_to_phase_circle(const ComplexVector& c, int target) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    if (j == target - 1) continue;
    acc += std::norm(c[j]);
  }
  const double rho = std::abs(c[target - 1]);
  return std::sqrt(acc + (rho - 1.0) * (rho - 1.0));
}

inline double distance_to_eigenstate(const ComplexVector& c, int target) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < c.size(); ++j) acc += std::norm(c[j] - (j == target - 1 ? Complex(1.0) : Complex(0.0)));
  return std::sqrt(acc);
}

inline std::size_t steps_per_unit(const PropagatorTables& tables, int hold_steps) {
  const double raw = 1.0 / tables.dt();
  const auto steps = static_cast<std::size_t>(std::llround(raw));
  if (std::abs(raw - static_cast<double>(steps)) > 1e-9 * raw || steps % static_cast<std::size_t>(hold_steps) != 0)
    throw InputError("steering: 1/dt must be an integer multiple of hold_steps");
  return steps;
}

}  // namespace detail

/// Drives z0 to within eps_half of e_target at an integer time: closed
/// loop until the state is within eps_half/2 of the phase circle of
/// e_target, then zero control over whole time units until the phase
/// exp(-i lambda_target n) c_target is close enough to 1.
inline StabilizationResult stabilize_to_eigenstate(const QuantumState& z0, const SpectralBasis& basis,
                                                   const PropagatorTables& tables, const FeedbackParams& params,
                                                   double eps_half, const SteeringOptions& options = {}) {
  params.validate(basis.truncation());
  if (!(eps_half > 0.0)) throw InputError("stabilize_to_eigenstate: eps must be positive");
  if (!(options.max_time > 0.0)) throw TimeoutError("stabilize_to_eigenstate: no time budget", std::numeric_limits<double>::infinity());
  const int t = params.target;
  const std::size_t unit = detail::steps_per_unit(tables, params.hold_steps);

  StabilizationResult out;
  out.control.dt = tables.dt();
  ComplexVector c = z0.coeffs;
  if (detail::distance_to_eigenstate(c, t) < eps_half) {
    out.final_state = z0;
    out.distance = detail::distance_to_eigenstate(c, t);
    out.phase = std::abs(c[t - 1]) > 0.0 ? c[t - 1] / std::abs(c[t - 1]) : Complex(1.0);
    return out;
  }

  if (std::abs(c[t - 1]) <= 1e-12) {
    const auto kick = excite_from_orthogonal(QuantumState{c}, basis, tables, params, options.excitation_budget);
    out.control.append(kick.control);
    c = kick.state.coeffs;
    const std::size_t pad = (unit - out.control.steps() % unit) % unit;
    out.control.append(ControlSignal::zero(tables.dt(), pad));
    tables.drift(c, static_cast<double>(pad) * tables.dt());
    out.closed_loop_units += static_cast<long>(out.control.steps() / unit);
  }

  FeedbackParams loop = params;
  loop.stop_threshold = 0.0;
  const double perp_goal = 0.5 * eps_half;
  auto run_unit = [&] {
    auto rec = closed_loop(QuantumState{c}, basis, tables, loop, 1.0);
    out.control.append(rec.applied);
    c = rec.final_state.coeffs;
    ++out.closed_loop_units;
  };

  double current = detail::distance_to_phase_circle(c, t);
  double best = current;
  while (current >= perp_goal) {
    if (static_cast<double>(out.closed_loop_units) >= options.max_time)
      throw TimeoutError("stabilize_to_eigenstate: time budget exhausted", best);
    run_unit();
    current = detail::distance_to_phase_circle(c, t);
    best = std::min(best, current);
  }

  const double lambda = basis.lambda(t);
  for (int epoch = 0; epoch <= options.extra_epochs; ++epoch) {
    const double perp2 = std::pow(detail::distance_to_phase_circle(c, t), 2) - std::pow(std::abs(c[t - 1]) - 1.0, 2);
    const double rho = std::abs(c[t - 1]);
    const double theta = std::arg(c[t - 1]);
    out.phase = c[t - 1] / rho;
    for (long n = 0; n <= options.max_phase_steps; ++n) {
      const double psi = theta - lambda * static_cast<double>(n);
      const double d2 = perp2 + (rho - 1.0) * (rho - 1.0) + 2.0 * rho * (1.0 - std::cos(psi));
      if (d2 < eps_half * eps_half) {
        out.control.append(ControlSignal::zero(tables.dt(), static_cast<std::size_t>(n) * unit));
        tables.drift(c, static_cast<double>(n));
        out.drift_units = n;
        out.final_state = QuantumState{c};
        out.distance = detail::distance_to_eigenstate(c, t);
        out.phase_aligned = true;
        return out;
      }
    }
    // Numerically resonant phase rotation: perturb by one more closed-loop unit.
    run_unit();
  }
  out.final_state = QuantumState{c};
  out.distance = detail::distance_to_eigenstate(c, t);
  out.phase_aligned = false;
  return out;
}

struct SteeringResult {
  ControlSignal control;
  double achieved = 0.0;  // || U(z0, control) - z1 ||, by direct propagation
  double forward_duration = 0.0;   // k0
  double backward_duration = 0.0;  // k1
  double sup_u = 0.0;
  double delta = 0.0;
};

/// Control u with || U(z0, u) - z1 || < eps and sup |u| < budget. The
/// returned distance always comes from propagating z0 with the returned
/// control.
inline SteeringResult steer(const QuantumState& z0, const QuantumState& z1, const SpectralBasis& basis,
                            const PropagatorTables& tables, const FeedbackParams& params, double eps, double budget,
                            const SteeringOptions& options = {}) {
  if (z0.size() != basis.truncation() || z1.size() != basis.truncation())
    throw InputError("steer: state dimension mismatch");
  if (std::abs(z0.norm() - 1.0) > 1e-8 || std::abs(z1.norm() - 1.0) > 1e-8) throw InputError("steer: states must be unit");
  if (!(eps > 0.0) || !(budget > 0.0)) throw InputError("steer: eps and budget must be positive");

  SteeringResult out;
  out.control.dt = tables.dt();
  out.delta = params.delta;
  if (distance(z0, z1) <= 1e-14) {
    out.achieved = distance(z0, z1);
    return out;
  }

  FeedbackParams p = params;
  while (true) {
    const auto forward = stabilize_to_eigenstate(z0, basis, tables, p, 0.5 * eps, options);
    const auto backward = stabilize_to_eigenstate(conjugate(z1), basis, tables, p, 0.5 * eps, options);
    if (!forward.phase_aligned || !backward.phase_aligned)
      throw TimeoutError("steer: phase alignment budget exceeded", forward.distance + backward.distance);
    ControlSignal u = forward.control;
    u.append(reverse_control(backward.control));
    const double sup = u.sup_norm();
    if (sup < budget) {
      out.control = std::move(u);
      out.control.dt = tables.dt();
      out.forward_duration = forward.control.duration();
      out.backward_duration = backward.control.duration();
      out.sup_u = sup;
      out.delta = p.delta;
      out.achieved = distance(propagate(z0, out.control, tables), z1);
      if (!(out.achieved < eps))
        throw NumericalError("steer: verification propagation missed eps (achieved " + std::to_string(out.achieved) + ")");
      return out;
    }
    p.delta *= 0.5;
    if (p.delta < options.min_delta) throw BudgetError("steer: amplitude budget unreachable at minimum gain");
  }
}

}  // namespace schro
