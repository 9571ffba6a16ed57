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

// Discretization of -d^2/dx^2 + V on (0, length) with
// Dirichlet boundary conditions, its truncated eigenbasis, coupling
// matrices, discrete Sobolev norms and first-order eigenvalue perturbation.
//
// Mode numbers in the public API are 1-based (mode 1 is the ground state).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "schro/error.hpp"
#include "schro/tridiagonal.hpp"

namespace schro {

using Complex = std::complex<double>;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;

/// Uniform interior grid on (0, length); nodes x_i = i * spacing, i = 1..n_points.
class Grid {
 public:
  static constexpr int kMinPoints = 16;

  Grid(int n_points, double length = 1.0) : n_points_(n_points), length_(length) {
    if (n_points < kMinPoints) throw InputError("grid: n_points must be at least 16");
    if (!(length > 0.0) || !std::isfinite(length)) throw InputError("grid: length must be positive and finite");
  }

  int n_points() const noexcept { return n_points_; }
  double length() const noexcept { return length_; }
  double spacing() const noexcept { return length_ / (n_points_ + 1); }
  double node(int i) const noexcept { return (i + 1) * spacing(); }  // 0-based storage index

  RealVector nodes() const {
    RealVector x(n_points_);
    for (int i = 0; i < n_points_; ++i) x[i] = node(i);
    return x;
  }

  /// Trapezoid quadrature of f*g (boundary samples vanish).
  template <typename A, typename B>
  auto inner(const Eigen::MatrixBase<A>& f, const Eigen::MatrixBase<B>& g) const {
    return spacing() * f.dot(g);
  }

 private:
  int n_points_;
  double length_;
};

/// Samples of V and Q at the interior grid nodes.
struct PotentialPair {
  RealVector v;
  RealVector q;

  void validate(const Grid& grid) const {
    if (v.size() != grid.n_points() || q.size() != grid.n_points())
      throw InputError("potentials: sample vectors must have n_points entries");
    if (!v.allFinite() || !q.allFinite()) throw InputError("potentials: non-finite samples");
  }
};

/// Truncated eigenbasis of -d^2/dx^2 + V. Immutable after construction.
struct SpectralBasis {
  Grid grid;
  PotentialPair potentials;
  RealVector eigenvalues;     // lambda_1 < ... < lambda_M
  RealMatrix eigenfunctions;  // n_points x M, columns quadrature-normalized
  RealMatrix coupling;        // B_jk = <Q e_k, e_j>, exactly symmetric
  RealVector norm_scale;      // Dirichlet-Laplacian eigenvalues mu_j (V-independent)

  int truncation() const noexcept { return static_cast<int>(eigenvalues.size()); }
  double lambda(int mode) const { return eigenvalues[mode - 1]; }
  auto mode_samples(int mode) const { return eigenfunctions.col(mode - 1); }
};

/// Coefficient vector c_j = <z, e_j> of a state in the eigenbasis.
struct QuantumState {
  ComplexVector coeffs;

  int size() const noexcept { return static_cast<int>(coeffs.size()); }
  double norm() const { return coeffs.norm(); }

  /// Unit vector e_mode in an M-mode basis.
  static QuantumState eigenstate(int truncation, int mode) {
    if (mode < 1 || mode > truncation) throw InputError("state: mode out of range");
    QuantumState s{ComplexVector::Zero(truncation)};
    s.coeffs[mode - 1] = 1.0;
    return s;
  }

  /// Uniformly distributed point of the unit sphere in C^M.
  template <typename Rng>
  static QuantumState random(int truncation, Rng& rng) {
    std::normal_distribution<double> normal;
    QuantumState s{ComplexVector(truncation)};
    for (int j = 0; j < truncation; ++j) s.coeffs[j] = Complex(normal(rng), normal(rng));
    s.coeffs /= s.coeffs.norm();
    return s;
  }
};

inline double distance(const QuantumState& a, const QuantumState& b) {
  if (a.size() != b.size()) throw InputError("distance: dimension mismatch");
  return (a.coeffs - b.coeffs).norm();
}

/// Eigenvalues of the Dirichlet finite-difference Laplacian on `grid`:
/// mu_j = (4/h^2) sin^2(j pi / (2 (n+1))).
inline RealVector dirichlet_laplacian_spectrum(const Grid& grid, int count) {
  const double h = grid.spacing();
  RealVector mu(count);
  for (int j = 1; j <= count; ++j) {
    const double s = std::sin(j * std::numbers::pi / (2.0 * (grid.n_points() + 1)));
    mu[j - 1] = 4.0 / (h * h) * s * s;
  }
  return mu;
}

/// B_jk = quadrature of Q e_k e_j, symmetrized as (B + B^T)/2.
inline RealMatrix coupling_matrix(const SpectralBasis& basis, const RealVector& q_samples) {
  if (q_samples.size() != basis.grid.n_points()) throw InputError("coupling_matrix: q_samples length mismatch");
  if (!q_samples.allFinite()) throw InputError("coupling_matrix: non-finite samples");
  const RealMatrix weighted = q_samples.asDiagonal() * basis.eigenfunctions;
  RealMatrix b = basis.grid.spacing() * (basis.eigenfunctions.transpose() * weighted);
  const RealMatrix sym = 0.5 * (b + b.transpose());
  return sym;
}

enum class Discretization {
  /// Galerkin projection onto the first `galerkin_modes` Dirichlet sine
  /// modes; matrix elements of V by grid quadrature. Exact spectrum for
  /// V = 0 and spectral accuracy for smooth V.
  sine_galerkin,
  /// Second-order central differences: symmetric tridiagonal matrix.
  finite_difference,
};

struct BasisOptions {
  Discretization discretization = Discretization::sine_galerkin;
  int galerkin_modes = 0;  // 0 selects max(64, 4 M), capped at n_points/2
};

namespace detail {

inline void normalize_and_orient(const Grid& grid, RealMatrix& functions) {
  const double h = grid.spacing();
  for (Eigen::Index j = 0; j < functions.cols(); ++j) {
    auto col = functions.col(j);
    col /= std::sqrt(h) * col.norm();
    const double cutoff = 1e-12 * col.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      if (std::abs(col[i]) > cutoff) {
        if (col[i] < 0.0) col = -col;
        break;
      }
    }
  }
}

/// Dirichlet sine modes sqrt(2/L) sin(k pi x / L), k = 1..count, on the grid.
inline RealMatrix sine_modes(const Grid& grid, int count) {
  const int n = grid.n_points();
  RealMatrix s(n, count);
  const double amp = std::sqrt(2.0 / grid.length());
  for (int k = 1; k <= count; ++k)
    for (int i = 0; i < n; ++i)
      s(i, k - 1) = amp * std::sin(std::numbers::pi * k * (i + 1.0) / (n + 1.0));
  return s;
}

}  // namespace detail

/// The `truncation` lowest eigenpairs of -d^2/dx^2 + V with Dirichlet
/// boundary conditions. Eigenfunctions are quadrature-normalized with the
/// first nonzero sample positive; the coupling matrix is assembled from Q.
inline SpectralBasis build_basis(const Grid& grid, const PotentialPair& potentials, int truncation,
                                 const BasisOptions& options = {}) {
  potentials.validate(grid);
  if (truncation < 1) throw InputError("build_basis: truncation must be positive");
  if (truncation > grid.n_points() / 4)
    throw ResolutionError("build_basis: truncation exceeds n_points/4; refine the grid");

  const int n = grid.n_points();
  const double h = grid.spacing();
  RealVector values;
  RealMatrix functions;
  RealVector scale;

  if (options.discretization == Discretization::finite_difference) {
    std::vector<double> diag(n), off(n - 1, -1.0 / (h * h));
    for (int i = 0; i < n; ++i) diag[i] = 2.0 / (h * h) + potentials.v[i];
    auto pairs = tridiagonal::lowest(diag, off, static_cast<std::size_t>(truncation));
    values = std::move(pairs.values);
    functions = std::move(pairs.vectors);
    scale = dirichlet_laplacian_spectrum(grid, truncation);
  } else {
    int modes = options.galerkin_modes > 0 ? options.galerkin_modes : std::max(64, 4 * truncation);
    modes = std::min(modes, n / 2);
    if (modes < truncation) throw ResolutionError("build_basis: galerkin_modes below truncation");
    const RealMatrix sines = detail::sine_modes(grid, modes);
    RealMatrix op = h * (sines.transpose() * (potentials.v.asDiagonal() * sines));
    op = 0.5 * (op + op.transpose()).eval();
    const double w = std::numbers::pi / grid.length();
    for (int k = 1; k <= modes; ++k) op(k - 1, k - 1) += w * w * k * k;
    Eigen::SelfAdjointEigenSolver<RealMatrix> eig(op);
    if (eig.info() != Eigen::Success) throw NumericalError("build_basis: Galerkin eigensolver failed");
    values = eig.eigenvalues().head(truncation);
    functions = sines * eig.eigenvectors().leftCols(truncation);
    scale.resize(truncation);
    for (int j = 1; j <= truncation; ++j) scale[j - 1] = w * w * j * j;
  }

  for (int j = 1; j < truncation; ++j)
    if (!(values[j] > values[j - 1])) throw NumericalError("build_basis: eigenvalues are not strictly increasing");
  detail::normalize_and_orient(grid, functions);

  SpectralBasis basis{grid, potentials, std::move(values), std::move(functions), {}, std::move(scale)};
  basis.coupling = coupling_matrix(basis, potentials.q);
  return basis;
}

/// Discrete Sobolev norm (sum_j mu_j^s |c_j|^2)^(1/2).
inline double sobolev_norm(const QuantumState& state, double s, const SpectralBasis& basis) {
  if (state.size() != basis.truncation()) throw InputError("sobolev_norm: dimension mismatch");
  if (s == 0.0) return state.coeffs.norm();
  double acc = 0.0;
  for (int j = 0; j < state.size(); ++j) acc += std::pow(basis.norm_scale[j], s) * std::norm(state.coeffs[j]);
  return std::sqrt(acc);
}

/// Quadrature inner products of grid samples against the eigenfunctions.
inline QuantumState project(const SpectralBasis& basis, const ComplexVector& grid_samples) {
  if (grid_samples.size() != basis.grid.n_points()) throw InputError("project: sample length mismatch");
  return QuantumState{basis.grid.spacing() * (basis.eigenfunctions.transpose() * grid_samples)};
}

/// sum_j c_j e_j on the grid.
inline ComplexVector synthesize(const SpectralBasis& basis, const QuantumState& state) {
  if (state.size() != basis.truncation()) throw InputError("synthesize: dimension mismatch");
  return basis.eigenfunctions * state.coeffs;
}

/// d/dtau lambda_j(V + tau sigma) at tau = 0, i.e. <sigma, e_j^2>.
inline double eigenvalue_derivative(const SpectralBasis& basis, const RealVector& sigma_samples, int mode) {
  if (mode < 1 || mode > basis.truncation()) throw InputError("eigenvalue_derivative: mode out of range");
  if (sigma_samples.size() != basis.grid.n_points()) throw InputError("eigenvalue_derivative: sample length mismatch");
  const auto e = basis.mode_samples(mode);
  return basis.grid.spacing() * (sigma_samples.array() * e.array().square()).sum();
}

}  // namespace schro
