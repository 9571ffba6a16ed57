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

// Unitary time integration of  i c' = Lambda c + u(t) B c  in the truncated
// eigenbasis by Strang splitting with exact exponentials:
//
//   c <- exp(-i Lambda dt/2) G exp(-i u D dt) G^T exp(-i Lambda dt/2) c,
//
// where B = G D G^T is factored once. Every factor is unitary, so the
// norm is conserved to rounding for any control.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "schro/error.hpp"
#include "schro/spectral_core.hpp"

namespace schro {

/// Piecewise-constant control: values[i] acts on [i dt, (i+1) dt).
struct ControlSignal {
  double dt = 1e-3;
  std::vector<double> values;

  std::size_t steps() const noexcept { return values.size(); }
  double duration() const noexcept { return dt * static_cast<double>(values.size()); }

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("control: dt must be positive and finite");
    for (double v : values)
      if (!std::isfinite(v)) throw InputError("control: non-finite control value");
  }

  double sup_norm() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }

  static ControlSignal zero(double dt, std::size_t steps) { return ControlSignal{dt, std::vector<double>(steps, 0.0)}; }

  /// Samples f at the midpoints of [0, duration) with step dt.
  template <typename F>
  static ControlSignal sample(double dt, std::size_t steps, F&& f) {
    ControlSignal out{dt, std::vector<double>(steps)};
    for (std::size_t i = 0; i < steps; ++i) out.values[i] = f((static_cast<double>(i) + 0.5) * dt);
    return out;
  }

  /// Values on [first, first + count) steps, re-based to start at 0.
  ControlSignal slice(std::size_t first, std::size_t count) const {
    if (first + count > values.size()) throw InputError("control: slice out of range");
    return ControlSignal{dt, std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(first),
                                                 values.begin() + static_cast<std::ptrdiff_t>(first + count))};
  }

  void append(const ControlSignal& other) {
    if (other.values.empty()) return;
    if (!values.empty() && other.dt != dt) throw InputError("control: cannot concatenate signals with different dt");
    if (values.empty()) dt = other.dt;
    values.insert(values.end(), other.values.begin(), other.values.end());
  }
};

/// Precomputed exponential-splitting data for one basis and one step dt.
class PropagatorTables {
 public:
  PropagatorTables(const SpectralBasis& basis, double dt) : dt_(dt), eigenvalues_(basis.eigenvalues) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("propagator: dt must be positive and finite");
    drift_half_.resize(basis.truncation());
    for (int j = 0; j < basis.truncation(); ++j) drift_half_[j] = std::polar(1.0, -0.5 * dt * basis.eigenvalues[j]);
    Eigen::SelfAdjointEigenSolver<RealMatrix> eig(basis.coupling);
    if (eig.info() != Eigen::Success) throw NumericalError("propagator: coupling factorization failed");
    rotation_ = eig.eigenvectors();
    coupling_eigenvalues_ = eig.eigenvalues();
  }

  double dt() const noexcept { return dt_; }
  int size() const noexcept { return static_cast<int>(drift_half_.size()); }
  const ComplexVector& drift_half() const noexcept { return drift_half_; }
  const RealMatrix& rotation() const noexcept { return rotation_; }
  const RealVector& coupling_eigenvalues() const noexcept { return coupling_eigenvalues_; }
  const RealVector& eigenvalues() const noexcept { return eigenvalues_; }

  /// One Strang step with constant control u, in place.
  void step(ComplexVector& c, double u, ComplexVector& work) const {
    c.array() *= drift_half_.array();
    if (u != 0.0) {
      work.noalias() = rotation_.transpose() * c;
      for (Eigen::Index k = 0; k < work.size(); ++k) work[k] *= std::polar(1.0, -u * coupling_eigenvalues_[k] * dt_);
      c.noalias() = rotation_ * work;
    }
    c.array() *= drift_half_.array();
  }

  /// Exact free evolution over time t: c_j <- exp(-i lambda_j t) c_j.
  void drift(ComplexVector& c, double t) const {
    for (Eigen::Index j = 0; j < c.size(); ++j) c[j] *= std::polar(1.0, -eigenvalues_[j] * t);
  }

 private:
  double dt_;
  RealVector eigenvalues_;
  ComplexVector drift_half_;
  RealMatrix rotation_;
  RealVector coupling_eigenvalues_;
};

/// Called after every `every`-th step (and at step 0) with (step, state).
using TrajectoryObserver = std::function<void(std::size_t, const ComplexVector&)>;

/// U_duration(state0, control). The control's dt must match the tables.
inline QuantumState propagate(const QuantumState& state0, const ControlSignal& control, const PropagatorTables& tables,
                              const TrajectoryObserver& observer = {}, std::size_t every = 1) {
  control.validate();
  if (state0.size() != tables.size()) throw InputError("propagate: state dimension does not match tables");
  if (std::abs(control.dt - tables.dt()) > 1e-15 * tables.dt())
    throw InputError("propagate: control dt does not match propagator tables");
  if (every == 0) throw InputError("propagate: sampling cadence must be positive");
  ComplexVector c = state0.coeffs;
  ComplexVector work(c.size());
  if (observer) observer(0, c);
  for (std::size_t i = 0; i < control.steps(); ++i) {
    tables.step(c, control.values[i], work);
    if (observer && (i + 1) % every == 0) observer(i + 1, c);
  }
  return QuantumState{std::move(c)};
}

/// u(t) = w(k - t) with k = duration of w.
inline ControlSignal reverse_control(const ControlSignal& w, double k) {
  if (std::abs(k - w.duration()) > 1e-9 * std::max(1.0, w.duration()))
    throw InputError("reverse_control: k must equal the signal duration");
  return ControlSignal{w.dt, std::vector<double>(w.values.rbegin(), w.values.rend())};
}

inline ControlSignal reverse_control(const ControlSignal& w) { return reverse_control(w, w.duration()); }

/// Componentwise complex conjugate (the eigenfunctions are real).
inline QuantumState conjugate(const QuantumState& state) { return QuantumState{state.coeffs.conjugate()}; }

}  // namespace schro
