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

// Cubic bilinear equation  i z' = -z'' + V z + u(t) Q |z|^2 z  in the
// truncated eigenbasis (Galerkin), its Lyapunov feedback and the
// linearized response of <U_1(e_p, u), e_l> at u = 0.
//
// The nonlinear sub-flow i c' = u H(c) c, H_jk(c) = <Q |z|^2 e_k, e_j>, is
// advanced by exp(-i u dt H(c_mid)) with a predicted midpoint c_mid. H is
// real symmetric, so each kick is exactly unitary.

#include <cmath>
#include <complex>
#include <cstddef>

#include <Eigen/Dense>

#include "schro/error.hpp"
#include "schro/lyapunov.hpp"
#include "schro/propagator.hpp"
#include "schro/spectral_core.hpp"

namespace schro {

inline constexpr double kBlowUpThreshold = 1e6;

/// H_jk(c) = quadrature of Q |z|^2 e_j e_k with z = sum_j c_j e_j.
inline RealMatrix cubic_kick_matrix(const ComplexVector& c, const SpectralBasis& basis) {
  const ComplexVector z = basis.eigenfunctions * c;
  const RealVector weight = basis.potentials.q.cwiseProduct(z.cwiseAbs2());
  RealMatrix h = basis.grid.spacing() * (basis.eigenfunctions.transpose() * (weight.asDiagonal() * basis.eigenfunctions));
  return 0.5 * (h + h.transpose());
}

/// Coefficients of the projection of Q |z|^2 z.
inline ComplexVector cubic_term(const ComplexVector& c, const SpectralBasis& basis) {
  return cubic_kick_matrix(c, basis) * c;
}

namespace detail {

inline void apply_symmetric_exponential(const RealMatrix& h, double theta, ComplexVector& c) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> eig(h);
  if (eig.info() != Eigen::Success) throw NumericalError("cubic propagator: kick factorization failed");
  ComplexVector w = eig.eigenvectors().transpose() * c;
  for (Eigen::Index k = 0; k < w.size(); ++k) w[k] *= std::polar(1.0, -theta * eig.eigenvalues()[k]);
  c.noalias() = eig.eigenvectors() * w;
}

inline void cubic_step(ComplexVector& c, double u, const SpectralBasis& basis, const PropagatorTables& tables) {
  c.array() *= tables.drift_half().array();
  if (u != 0.0) {
    ComplexVector mid = c;
    apply_symmetric_exponential(cubic_kick_matrix(c, basis), 0.5 * u * tables.dt(), mid);
    apply_symmetric_exponential(cubic_kick_matrix(mid, basis), u * tables.dt(), c);
  }
  c.array() *= tables.drift_half().array();
}

}  // namespace detail

struct CubicResult {
  QuantumState state;
  bool blow_up = false;     // H^2 surrogate norm exceeded kBlowUpThreshold; state is where it stopped
  std::size_t steps_taken = 0;
};

inline CubicResult propagate_cubic(const QuantumState& state0, const ControlSignal& control, const SpectralBasis& basis,
                                   const PropagatorTables& tables, const TrajectoryObserver& observer = {},
                                   std::size_t every = 1) {
  control.validate();
  if (state0.size() != basis.truncation() || tables.size() != basis.truncation())
    throw InputError("propagate_cubic: dimension mismatch");
  if (std::abs(control.dt - tables.dt()) > 1e-15 * tables.dt())
    throw InputError("propagate_cubic: control dt does not match propagator tables");
  CubicResult out;
  ComplexVector c = state0.coeffs;
  if (observer) observer(0, c);
  for (std::size_t i = 0; i < control.steps(); ++i) {
    detail::cubic_step(c, control.values[i], basis, tables);
    if (!c.allFinite()) throw NumericalError("propagate_cubic: non-finite state");
    out.steps_taken = i + 1;
    if (observer && (i + 1) % every == 0) observer(i + 1, c);
    if (sobolev_norm(QuantumState{c}, 2.0, basis) > kBlowUpThreshold) {
      out.blow_up = true;
      break;
    }
  }
  out.state = QuantumState{std::move(c)};
  return out;
}

/// -delta * Im( alpha sum_{j != i} lambda_j^2 w_j conj(c_j) - w_i conj(c_i) ),
/// w the projection of Q |z|^2 z. The literal nonlinear law has delta = 1.
inline double nonlinear_feedback_gain(const QuantumState& state, const SpectralBasis& basis, double alpha, int target,
                                      double delta = 1.0) {
  if (state.size() != basis.truncation()) throw InputError("nonlinear_feedback_gain: dimension mismatch");
  if (target < 1 || target > basis.truncation()) throw InputError("nonlinear_feedback_gain: target out of range");
  const ComplexVector w = cubic_term(state.coeffs, basis);
  return -delta * lyapunov_pairing(state.coeffs, w, basis.eigenvalues, alpha, target);
}

/// Sample-and-hold closed loop of the cubic equation (same record schema
/// as the linear closed loop).
inline ClosedLoopRecord nonlinear_closed_loop(const QuantumState& state0, const SpectralBasis& basis,
                                              const PropagatorTables& tables, const FeedbackParams& params,
                                              double horizon) {
  auto advance = [&](ComplexVector& c, double u, int steps) {
    for (int s = 0; s < steps; ++s) detail::cubic_step(c, u, basis, tables);
  };
  auto pairing = [&](const ComplexVector& c) {
    return lyapunov_pairing(c, cubic_term(c, basis), basis.eigenvalues, params.alpha, params.target);
  };
  auto rec = detail::run_closed_loop(state0, basis, params, tables.dt(), horizon, advance, pairing);
  for (double h2 : rec.norm_h2)
    if (h2 > kBlowUpThreshold) rec.blow_up = true;
  return rec;
}

/// <Q e_p^3, e_l> by grid quadrature.
inline double cubic_source_pairing(const SpectralBasis& basis, int p, int l) {
  const auto ep = basis.mode_samples(p).array();
  return basis.grid.spacing() * (basis.potentials.q.array() * ep * ep * ep * basis.mode_samples(l).array()).sum();
}

/// integral_0^T exp(-i omega s) u(s) ds, exact for a piecewise-constant u.
inline Complex oscillatory_integral(const ControlSignal& u, double omega) {
  Complex acc = 0.0;
  for (std::size_t k = 0; k < u.steps(); ++k) {
    const double a = static_cast<double>(k) * u.dt;
    const double b = a + u.dt;
    if (omega == 0.0) {
      acc += u.values[k] * u.dt;
    } else {
      acc += u.values[k] * (std::polar(1.0, -omega * a) - std::polar(1.0, -omega * b)) / Complex(0.0, omega);
    }
  }
  return acc;
}

/// First-order response  -i e^{-i lambda_l} <Q e_p^3, e_l> int_0^1 e^{-i (lambda_p - lambda_l) s} u(s) ds
/// of <U_1(e_p, u), e_l> to a control u on [0, 1].
inline Complex linearized_response(int p, int l, const ControlSignal& u, const SpectralBasis& basis) {
  const int m = basis.truncation();
  if (p < 1 || p > m || l < 1 || l > m) throw InputError("linearized_response: mode out of range");
  if (p == l) throw InputError("linearized_response: source and probe modes must differ");
  u.validate();
  if (std::abs(u.duration() - 1.0) > 1e-9) throw InputError("linearized_response: control must live on [0, 1]");
  const double omega = basis.lambda(p) - basis.lambda(l);
  if (std::abs(omega) <= 1e-9 * std::max(1.0, std::abs(basis.lambda(p))))
    throw NumericalError("linearized_response: resonance-degenerate pair (lambda_p == lambda_l)");
  const Complex phase = Complex(0.0, -1.0) * std::polar(1.0, -basis.lambda(l));
  return phase * cubic_source_pairing(basis, p, l) * oscillatory_integral(u, omega);
}

struct LinearizedMap {
  Eigen::Matrix2d matrix;  // columns: (Re, Im) of the response to sin(omega t), cos(omega t)
  Eigen::Vector2d singular_values;
  int rank = 0;
};

/// Real-linear map from span{sin(omega t), cos(omega t)}, omega = lambda_p - lambda_l,
/// into C by the linearized response; full rank means an isomorphism onto C.
inline LinearizedMap linearized_map(int p, int l, const SpectralBasis& basis, double dt, double rank_tol = 1e-10) {
  const double omega = basis.lambda(p) - basis.lambda(l);
  const auto steps = static_cast<std::size_t>(std::llround(1.0 / dt));
  const auto sin_u = ControlSignal::sample(dt, steps, [&](double t) { return std::sin(omega * t); });
  const auto cos_u = ControlSignal::sample(dt, steps, [&](double t) { return std::cos(omega * t); });
  const Complex a = linearized_response(p, l, sin_u, basis);
  const Complex b = linearized_response(p, l, cos_u, basis);
  LinearizedMap out;
  out.matrix << a.real(), b.real(), a.imag(), b.imag();
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(out.matrix);
  out.singular_values = svd.singularValues();
  const double scale = std::max(out.singular_values[0], 1e-300);
  out.rank = (out.singular_values[0] > 0.0 ? 1 : 0) + (out.singular_values[1] > rank_tol * scale ? 1 : 0);
  return out;
}

}  // namespace schro
