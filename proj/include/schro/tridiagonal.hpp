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

// Lowest eigenpairs of a real symmetric tridiagonal matrix by Sturm-sequence
// bisection followed by inverse iteration.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "schro/error.hpp"

namespace schro::tridiagonal {

/// Number of eigenvalues strictly below `x` (negative pivots of T - xI).
inline std::size_t sturm_count(std::span<const double> diag, std::span<const double> off, double x) {
  const double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
  std::size_t count = 0;
  double q = diag[0] - x;
  if (q < 0.0) ++count;
  for (std::size_t i = 1; i < diag.size(); ++i) {
    if (std::abs(q) < tiny) q = -tiny;
    q = diag[i] - x - off[i - 1] * off[i - 1] / q;
    if (q < 0.0) ++count;
  }
  return count;
}

/// Solves (T - shift I) x = rhs by Gaussian elimination with partial pivoting.
/// A zero pivot is replaced by a tiny perturbation, which is what inverse
/// iteration wants when the shift is an eigenvalue to working precision.
inline void shifted_solve(std::span<const double> diag, std::span<const double> off, double shift,
                          std::vector<double>& x) {
  const std::size_t n = diag.size();
  // Row i holds (sub, main, sup, sup2) after pivoting; sub is eliminated.
  std::vector<double> a(n), b(n), c(n, 0.0), d(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    b[i] = diag[i] - shift;
    if (i + 1 < n) c[i] = off[i];
    if (i > 0) a[i] = off[i - 1];
  }
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(diag[i] - shift) + (i > 0 ? std::abs(off[i - 1]) : 0.0));
  const double eps_pivot = std::numeric_limits<double>::epsilon() * std::max(scale, 1.0);

  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double sub = a[i + 1];
    if (std::abs(b[i]) >= std::abs(sub)) {
      if (b[i] == 0.0) b[i] = eps_pivot;
      const double m = sub / b[i];
      b[i + 1] -= m * c[i];
      c[i + 1] -= m * d[i];
      x[i + 1] -= m * x[i];
    } else {
      // Swap rows i and i+1.
      const double m = b[i] / sub;
      const double bi = sub, ci = b[i + 1], di = (i + 2 < n) ? c[i + 1] : 0.0;
      const double bn = c[i] - m * ci;
      const double cn = d[i] - m * di;
      const double xi = x[i + 1];
      x[i + 1] = x[i] - m * xi;
      x[i] = xi;
      b[i] = bi;
      c[i] = ci;
      d[i] = di;
      b[i + 1] = bn;
      c[i + 1] = cn;
    }
  }
  if (b[n - 1] == 0.0) b[n - 1] = eps_pivot;
  x[n - 1] /= b[n - 1];
  if (n >= 2) x[n - 2] = (x[n - 2] - c[n - 2] * x[n - 1]) / b[n - 2];
  for (std::size_t k = n - 2; k-- > 0;) x[k] = (x[k] - c[k] * x[k + 1] - d[k] * x[k + 2]) / b[k];
}

struct Eigenpairs {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns, unit Euclidean norm
};

/// The `count` smallest eigenpairs. Eigenvalues are located by bisection on
/// the Sturm count to full working precision; eigenvectors come from inverse
/// iteration with a deterministic start vector. Clustered eigenvalues are
/// not expected (the operators here have simple spectra), but vectors of
/// close pairs are still re-orthogonalized against their predecessors.
inline Eigenpairs lowest(std::span<const double> diag, std::span<const double> off, std::size_t count) {
  const std::size_t n = diag.size();
  if (n == 0 || off.size() + 1 != n) throw InputError("tridiagonal: inconsistent diagonal/off-diagonal sizes");
  if (count == 0 || count > n) throw InputError("tridiagonal: requested eigenpair count out of range");

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(off[i - 1]) : 0.0) + (i + 1 < n ? std::abs(off[i]) : 0.0);
    lo = std::min(lo, diag[i] - r);
    hi = std::max(hi, diag[i] + r);
  }
  const double span_width = std::max(hi - lo, 1.0);
  lo -= 1e-3 * span_width;
  hi += 1e-3 * span_width;

  // Tighten the upper end so bisection does not start from the full
  // Gershgorin width for fine grids.
  double top = lo + 1.0;
  while (top < hi && sturm_count(diag, off, top) < count) top = lo + 2.0 * (top - lo);
  top = std::min(top, hi);

  Eigenpairs out;
  out.values.resize(static_cast<Eigen::Index>(count));
  double left = lo;
  for (std::size_t k = 0; k < count; ++k) {
    double a = left, b = top;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      if (sturm_count(diag, off, mid) > k) b = mid; else a = mid;
      const double tol = 2.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b));
      if (b - a <= tol) break;
    }
    out.values[static_cast<Eigen::Index>(k)] = 0.5 * (a + b);
    left = a;
  }

  out.vectors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(count));
  std::vector<double> x(n);
  for (std::size_t k = 0; k < count; ++k) {
    const double lambda = out.values[static_cast<Eigen::Index>(k)];
    for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 1e-3 * std::sin(0.37 * static_cast<double>(i + 1) + 0.11 * static_cast<double>(k));
    for (int it = 0; it < 4; ++it) {
      shifted_solve(diag, off, lambda, x);
      Eigen::Map<Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(n));
      for (std::size_t prev = 0; prev < k; ++prev) {
        const double gap = std::abs(lambda - out.values[static_cast<Eigen::Index>(prev)]);
        if (gap < 1e-6 * std::max(1.0, std::abs(lambda))) {
          auto u = out.vectors.col(static_cast<Eigen::Index>(prev));
          v -= u.dot(v) * u;
        }
      }
      const double norm = v.norm();
      if (!std::isfinite(norm) || norm == 0.0) throw NumericalError("tridiagonal: inverse iteration failed");
      v /= norm;
    }
    out.vectors.col(static_cast<Eigen::Index>(k)) = Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(n));
  }
  return out;
}

}  // namespace schro::tridiagonal
