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

// Shared fixtures for the test binaries.

#include <cmath>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "schro/potentials.hpp"
#include "schro/propagator.hpp"
#include "schro/random.hpp"
#include "schro/spectral_core.hpp"

namespace schro::testing {

inline constexpr const char* kGenericV = "linear 1";
inline constexpr const char* kGenericQ = "gauss 1 0.37 0.1";

inline SpectralBasis make_basis(const std::string& v, const std::string& q, int n_points, int truncation,
                                const BasisOptions& options = {}) {
  Grid grid(n_points);
  return build_basis(grid, sample_potentials(grid, AnalyticPotential::parse(v), AnalyticPotential::parse(q)),
                     truncation, options);
}

/// V(x) = x with a Gaussian bump Q at 0.37: passes both parts of the
/// linear non-degeneracy check at N = 8.
inline SpectralBasis generic_basis(int n_points = 512, int truncation = 8) {
  return make_basis(kGenericV, kGenericQ, n_points, truncation);
}

inline ControlSignal random_control(double dt, std::size_t steps, Rng& rng, double amplitude = 5.0) {
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  ControlSignal c;
  c.dt = dt;
  c.values.resize(steps);
  for (auto& v : c.values) v = u(rng);
  return c;
}

/// B_1j for V = 0, Q = x on (0, 1): int 2x sin(pi x) sin(j pi x) dx in closed form.
inline double free_linear_coupling(int j) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  if (j == 1) return 0.5;
  auto cos_moment = [&](int k) {  // int_0^1 x cos(k pi x) dx, k >= 1
    return ((k % 2 == 0 ? 1.0 : -1.0) - 1.0) / (k * k * pi2);
  };
  return cos_moment(j - 1) - cos_moment(j + 1);
}

// Plain quadruple loop with direct grid products.
inline std::set<std::vector<int>> brute_quartic(const SpectralBasis& b, int n, double tol) {
  std::set<std::vector<int>> out;
  const double h = b.grid.spacing();
  for (int i = 1; i <= n; ++i)
    for (int j = i; j <= n; ++j)
      for (int p = j; p <= n; ++p)
        for (int q = p; q <= n; ++q) {
          double acc = 0.0;
          for (int x = 0; x < b.grid.n_points(); ++x)
            acc += b.potentials.q[x] * b.eigenfunctions(x, i - 1) * b.eigenfunctions(x, j - 1) *
                   b.eigenfunctions(x, p - 1) * b.eigenfunctions(x, q - 1);
          if (std::abs(h * acc) <= tol) out.insert({i, j, p, q});
        }
  return out;
}

}  // namespace schro::testing
