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

// Finite-truncation checks of the spectral non-degeneracy hypotheses used by
// the feedback stabilization results, plus exponential-sum coefficient
// extraction and empirical genericity scans.
//
// Every report carries the index bound it was checked up to; a passing
// report says nothing about modes beyond that bound.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "schro/error.hpp"
#include "schro/random.hpp"
#include "schro/spectral_core.hpp"

namespace schro {

inline constexpr double kDefaultCouplingTol = 1e-8;
inline constexpr double kDefaultGapTol = 1e-6;

struct Violation {
  std::vector<int> indices;  // 1-based mode numbers
  double value = 0.0;
};

struct ConditionReport {
  std::string condition_id;
  int index_bound = 0;
  double tolerance = 0.0;
  std::vector<Violation> violations;

  bool passed() const noexcept { return violations.empty(); }

  bool contains(const std::vector<int>& indices) const {
    return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.indices == indices; });
  }
};

inline void to_json(nlohmann::json& j, const Violation& v) { j = {{"indices", v.indices}, {"value", v.value}}; }

inline void to_json(nlohmann::json& j, const ConditionReport& r) {
  j = {{"condition_id", r.condition_id},
       {"index_bound", r.index_bound},
       {"tolerance", r.tolerance},
       {"passed", r.passed()},
       {"violations", r.violations}};
}

namespace detail {

inline void require_bound(const SpectralBasis& basis, int index_bound) {
  if (index_bound < 1) throw InputError("conditions: index bound must be positive");
  if (index_bound > basis.truncation())
    throw TruncationError("conditions: index bound " + std::to_string(index_bound) + " exceeds truncation " +
                          std::to_string(basis.truncation()));
}

inline void sort_violations(std::vector<Violation>& v) {
  std::sort(v.begin(), v.end(), [](const Violation& a, const Violation& b) { return a.indices < b.indices; });
}

}  // namespace detail

/// Condition (i): <Q e_1, e_j> != 0 for j <= N; condition (ii): the gap
/// lambda_1 - lambda_j is not repeated by any other pair lambda_p - lambda_q
/// ({1,j} != {p,q}, j != 1). Violations of (ii) are reported as (j, p, q).
inline std::pair<ConditionReport, ConditionReport> check_condition_p(const SpectralBasis& basis, int index_bound,
                                                                     double coupling_tol = kDefaultCouplingTol,
                                                                     double gap_tol = kDefaultGapTol) {
  detail::require_bound(basis, index_bound);
  const int n = index_bound;
  ConditionReport coupling{"coupling_nonvanishing", n, coupling_tol, {}};
  for (int j = 1; j <= n; ++j) {
    const double b = basis.coupling(0, j - 1);
    if (std::abs(b) <= coupling_tol) coupling.violations.push_back({{j}, b});
  }

  // Sorted table of all gaps lambda_p - lambda_q; each lambda_1 - lambda_j
  // is matched by a binary-searched window instead of a triple loop.
  struct Gap {
    double value;
    int p, q;
  };
  std::vector<Gap> gaps;
  gaps.reserve(static_cast<std::size_t>(n * n));
  for (int p = 1; p <= n; ++p)
    for (int q = 1; q <= n; ++q) gaps.push_back({basis.lambda(p) - basis.lambda(q), p, q});
  std::sort(gaps.begin(), gaps.end(), [](const Gap& a, const Gap& b) { return a.value < b.value; });

  ConditionReport gap{"gap_condition", n, gap_tol, {}};
  for (int j = 2; j <= n; ++j) {
    const double target = basis.lambda(1) - basis.lambda(j);
    auto it = std::lower_bound(gaps.begin(), gaps.end(), target - gap_tol,
                               [](const Gap& g, double x) { return g.value < x; });
    for (; it != gaps.end() && it->value <= target + gap_tol; ++it) {
      const bool same_pair = (it->p == 1 && it->q == j) || (it->p == j && it->q == 1);
      if (same_pair) continue;
      const double diff = target - it->value;
      if (std::abs(diff) <= gap_tol) gap.violations.push_back({{j, it->p, it->q}, diff});
    }
  }
  detail::sort_violations(gap.violations);
  return {std::move(coupling), std::move(gap)};
}

/// Admissibility of the Lyapunov weight alpha: for 2 <= j <= N the
/// coefficient B_j1 (alpha lambda_j^2 + 1) multiplying the resonant
/// exponentials of the free-drift feedback signal must not vanish.
inline ConditionReport check_alpha_admissible(const SpectralBasis& basis, double alpha, int index_bound,
                                              double tol = kDefaultCouplingTol) {
  detail::require_bound(basis, index_bound);
  if (!std::isfinite(alpha)) throw InputError("check_alpha_admissible: alpha must be finite");
  ConditionReport report{"alpha_admissible", index_bound, tol, {}};
  for (int j = 2; j <= index_bound; ++j) {
    const double lambda = basis.lambda(j);
    const double value = basis.coupling(j - 1, 0) * (alpha * lambda * lambda + 1.0);
    if (std::abs(value) <= tol) report.violations.push_back({{j}, value});
  }
  return report;
}

/// Quadruple pairing <Q e_i e_j, e_p e_q>, symmetric in all four indices.
inline double quartic_pairing(const SpectralBasis& basis, int i, int j, int p, int q) {
  const auto ei = basis.mode_samples(i).array();
  const auto ej = basis.mode_samples(j).array();
  const auto ep = basis.mode_samples(p).array();
  const auto eq = basis.mode_samples(q).array();
  return basis.grid.spacing() * (basis.potentials.q.array() * ei * ej * ep * eq).sum();
}

/// Formal combination lambda_a + lambda_b - lambda_c - lambda_d after
/// cancelling common indices, stored as sorted remaining plus/minus lists.
struct GapCombination {
  std::vector<int> plus;
  std::vector<int> minus;

  static GapCombination reduce(int i, int j, int p, int q) {
    std::vector<int> plus{std::min(i, p), std::max(i, p)};
    std::vector<int> minus{std::min(j, q), std::max(j, q)};
    GapCombination out;
    std::size_t a = 0, b = 0;
    while (a < plus.size() && b < minus.size()) {
      if (plus[a] == minus[b]) {
        ++a;
        ++b;
      } else if (plus[a] < minus[b]) {
        out.plus.push_back(plus[a++]);
      } else {
        out.minus.push_back(minus[b++]);
      }
    }
    for (; a < plus.size(); ++a) out.plus.push_back(plus[a]);
    for (; b < minus.size(); ++b) out.minus.push_back(minus[b]);
    return out;
  }

  bool trivial() const noexcept { return plus.empty(); }

  /// Representative (i, j, p, q); cancelled slots are filled with mode 1.
  std::array<int, 4> representative() const {
    std::array<int, 4> r{1, 1, 1, 1};
    if (plus.size() >= 1) {
      r[0] = plus[0];
      r[1] = minus[0];
    }
    if (plus.size() == 2) {
      r[2] = plus[1];
      r[3] = minus[1];
    }
    return r;
  }

  double value(const SpectralBasis& basis) const {
    double v = 0.0;
    for (int k : plus) v += basis.lambda(k);
    for (int k : minus) v -= basis.lambda(k);
    return v;
  }

  auto operator<=>(const GapCombination&) const = default;
};

inline constexpr int kMaxQuarticIndexBound = 16;

/// Canonical ordering of a violating pair of distinct formal combinations:
/// the left member is non-trivial, and of two non-trivial members the one
/// with the smaller representative comes first.
inline Violation gap_pair_violation(const GapCombination& a, const GapCombination& b, const SpectralBasis& basis) {
  const GapCombination* left = &a;
  const GapCombination* right = &b;
  if (left->trivial() || (!right->trivial() && right->representative() < left->representative()))
    std::swap(left, right);
  const auto l = left->representative();
  const auto r = right->representative();
  return Violation{{l[0], l[1], l[2], l[3], r[0], r[1], r[2], r[3]}, left->value(basis) - right->value(basis)};
}

/// Condition (i): <Q e_i e_j, e_p e_q> != 0, reported once per sorted
/// quadruple i <= j <= p <= q. Condition (ii): two gap sums
/// lambda_i - lambda_j + lambda_p - lambda_q agree only when they are the
/// same formal combination; the left member must be non-trivial
/// ({i,p} != {j,q} as multisets). Pairs are reported by representatives
/// as eight indices.
inline std::pair<ConditionReport, ConditionReport> check_condition_2p(const SpectralBasis& basis, int index_bound,
                                                                      double coupling_tol = kDefaultCouplingTol,
                                                                      double gap_tol = kDefaultGapTol) {
  detail::require_bound(basis, index_bound);
  const int n = index_bound;
  if (n > kMaxQuarticIndexBound)
    throw ResourceError("check_condition_2p: index bound above " + std::to_string(kMaxQuarticIndexBound) +
                        " exceeds the scan size cap");

  ConditionReport coupling{"nonlinear_coupling", n, coupling_tol, {}};
  const double h = basis.grid.spacing();
  std::vector<RealVector> weighted_products;  // Q e_i e_j, i <= j
  for (int i = 1; i <= n; ++i)
    for (int j = i; j <= n; ++j)
      weighted_products.push_back(basis.potentials.q.cwiseProduct(basis.mode_samples(i)).cwiseProduct(basis.mode_samples(j)));
  std::size_t ij = 0;
  for (int i = 1; i <= n; ++i) {
    for (int j = i; j <= n; ++j, ++ij) {
      for (int p = j; p <= n; ++p) {
        const RealVector pp = basis.mode_samples(p);
        for (int q = p; q <= n; ++q) {
          const double value = h * weighted_products[ij].dot(pp.cwiseProduct(basis.mode_samples(q)));
          if (std::abs(value) <= coupling_tol) coupling.violations.push_back({{i, j, p, q}, value});
        }
      }
    }
  }

  std::vector<GapCombination> classes;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      for (int p = 1; p <= n; ++p)
        for (int q = 1; q <= n; ++q) classes.push_back(GapCombination::reduce(i, j, p, q));
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

  std::vector<std::pair<double, std::size_t>> by_value;
  by_value.reserve(classes.size());
  for (std::size_t k = 0; k < classes.size(); ++k) by_value.emplace_back(classes[k].value(basis), k);
  std::sort(by_value.begin(), by_value.end());

  ConditionReport gap{"nonlinear_gap", n, gap_tol, {}};
  for (std::size_t a = 0; a < by_value.size(); ++a) {
    for (std::size_t b = a + 1; b < by_value.size() && by_value[b].first - by_value[a].first <= gap_tol; ++b) {
      gap.violations.push_back(gap_pair_violation(classes[by_value[a].second], classes[by_value[b].second], basis));
    }
  }
  detail::sort_violations(gap.violations);
  return {std::move(coupling), std::move(gap)};
}

/// (1/T) * integral_0^T f(t) exp(-i r_n t) dt by the trapezoid rule, where
/// `samples` are f on the uniform grid t_k = k T / (K - 1), k = 0..K-1.
/// For f = sum_j c_j exp(i r_j t) this tends to c_n as T grows.
inline Complex exponential_coefficient(const ComplexVector& samples, const RealVector& frequencies, int n,
                                       double horizon) {
  if (n < 1 || n > frequencies.size()) throw InputError("exponential_coefficient: index out of range");
  if (samples.size() < 2) throw InputError("exponential_coefficient: need at least two samples");
  if (!(horizon > 0.0)) throw InputError("exponential_coefficient: horizon must be positive");
  std::vector<double> sorted(frequencies.data(), frequencies.data() + frequencies.size());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw InputError("exponential_coefficient: duplicate frequencies");

  const double r = frequencies[n - 1];
  const Eigen::Index k = samples.size();
  const double step = horizon / static_cast<double>(k - 1);
  Complex acc = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double w = (i == 0 || i == k - 1) ? 0.5 : 1.0;
    acc += w * samples[i] * std::polar(1.0, -r * step * static_cast<double>(i));
  }
  return acc * step / horizon;
}

struct GenericityReport {
  int samples = 0;
  int passed = 0;
  std::optional<double> pass_rate;  // empty when no samples were drawn
  std::vector<int> failures;        // sample indices whose basis failed
};

inline void to_json(nlohmann::json& j, const GenericityReport& r) {
  j = {{"samples", r.samples}, {"passed", r.passed}, {"failures", r.failures}};
  j["pass_rate"] = r.pass_rate ? nlohmann::json(*r.pass_rate) : nlohmann::json(nullptr);
}

/// Draws potentials of V from `family` (sample i uses stream i of `seed`),
/// builds an index_bound-mode basis for each and runs check_condition_p.
using PotentialFamily = std::function<RealVector(const Grid&, Rng&)>;

inline GenericityReport genericity_scan(const Grid& grid, const PotentialFamily& family, const RealVector& q_samples,
                                        int sample_count, int index_bound, double coupling_tol, double gap_tol,
                                        std::uint64_t seed, const BasisOptions& options = {}) {
  if (sample_count < 0) throw InputError("genericity_scan: negative sample count");
  GenericityReport report;
  report.samples = sample_count;
  for (int i = 0; i < sample_count; ++i) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(i));
    PotentialPair pots{family(grid, rng), q_samples};
    const auto basis = build_basis(grid, pots, index_bound, options);
    const auto [coupling, gap] = check_condition_p(basis, index_bound, coupling_tol, gap_tol);
    if (coupling.passed() && gap.passed()) ++report.passed;
    else report.failures.push_back(i);
  }
  if (sample_count > 0) report.pass_rate = static_cast<double>(report.passed) / sample_count;
  return report;
}

/// The single potential V = `fixed`.
inline PotentialFamily constant_family(RealVector fixed) {
  return [fixed = std::move(fixed)](const Grid&, Rng&) { return fixed; };
}

/// V(x) = sum_{k <= terms} a_k cos(k pi x), a_k uniform in [-amplitude, amplitude].
inline PotentialFamily random_cosine_family(int terms = 5, double amplitude = 5.0) {
  return [terms, amplitude](const Grid& grid, Rng& rng) {
    std::uniform_real_distribution<double> coef(-amplitude, amplitude);
    std::vector<double> a(static_cast<std::size_t>(terms));
    for (auto& x : a) x = coef(rng);
    RealVector v = RealVector::Zero(grid.n_points());
    for (int i = 0; i < grid.n_points(); ++i)
      for (int k = 1; k <= terms; ++k) v[i] += a[k - 1] * std::cos(k * std::numbers::pi * grid.node(i));
    return v;
  };
}

}  // namespace schro
