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

// Named analytic potential families and CSV potential files.
//
//   zero
//   constant a          a
//   linear a            a*x
//   quadratic a         a*x^2
//   cosine a k          a*cos(k*pi*x)
//   gauss a x0 w        a*exp(-(x-x0)^2 / (2 w^2))
//
// Terms may be summed with '+', e.g. "linear 1 + gauss 2 0.3 0.05".

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "schro/error.hpp"
#include "schro/spectral_core.hpp"

namespace schro {

class AnalyticPotential {
 public:
  struct Term {
    std::string family;
    std::vector<double> params;
  };

  AnalyticPotential() = default;
  explicit AnalyticPotential(std::vector<Term> terms) : terms_(std::move(terms)) {}

  /// Terms are separated by a standalone '+' token, e.g. "linear 1 + gauss 2 0.5 0.1".
  static AnalyticPotential parse(const std::string& text) {
    std::vector<std::vector<std::string>> chunks(1);
    std::istringstream all(text);
    std::string tok;
    while (all >> tok) {
      if (tok == "+") chunks.emplace_back();
      else chunks.back().push_back(tok);
    }
    std::vector<Term> terms;
    for (const auto& chunk : chunks) {
      if (chunk.empty()) throw InputError("potential: empty term in '" + text + "'");
      Term term;
      term.family = chunk.front();
      for (std::size_t k = 1; k < chunk.size(); ++k) {
        const std::string& t = chunk[k];
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
        if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(value))
          throw InputError("potential: bad number '" + t + "' in '" + text + "'");
        term.params.push_back(value);
      }
      const std::size_t want = arity(term.family);
      if (term.params.size() != want)
        throw InputError("potential: family '" + term.family + "' takes " + std::to_string(want) + " parameter(s)");
      if (term.family == "gauss" && !(term.params[2] > 0.0)) throw InputError("potential: gauss width must be positive");
      terms.push_back(std::move(term));
    }
    if (terms.empty()) throw InputError("potential: empty specification");
    return AnalyticPotential(std::move(terms));
  }

  double operator()(double x) const {
    double v = 0.0;
    for (const auto& t : terms_) {
      const auto& p = t.params;
      if (t.family == "zero") {
      } else if (t.family == "constant") {
        v += p[0];
      } else if (t.family == "linear") {
        v += p[0] * x;
      } else if (t.family == "quadratic") {
        v += p[0] * x * x;
      } else if (t.family == "cosine") {
        v += p[0] * std::cos(p[1] * std::numbers::pi * x);
      } else if (t.family == "gauss") {
        const double d = x - p[1];
        v += p[0] * std::exp(-d * d / (2.0 * p[2] * p[2]));
      }
    }
    return v;
  }

  RealVector sample(const Grid& grid) const {
    RealVector out(grid.n_points());
    for (int i = 0; i < grid.n_points(); ++i) out[i] = (*this)(grid.node(i));
    return out;
  }

  std::string to_string() const {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      if (i) os << " + ";
      os << terms_[i].family;
      for (double p : terms_[i].params) os << ' ' << p;
    }
    return os.str();
  }

  const std::vector<Term>& terms() const noexcept { return terms_; }

 private:
  static std::size_t arity(const std::string& family) {
    if (family == "zero") return 0;
    if (family == "constant" || family == "linear" || family == "quadratic") return 1;
    if (family == "cosine") return 2;
    if (family == "gauss") return 3;
    throw InputError("potential: unknown family '" + family + "'");
  }

  std::vector<Term> terms_{Term{"zero", {}}};
};

inline PotentialPair sample_potentials(const Grid& grid, const AnalyticPotential& v, const AnalyticPotential& q) {
  return PotentialPair{v.sample(grid), q.sample(grid)};
}

/// Reads a CSV with header x,v,q and interpolates linearly onto the grid
/// nodes. Nodes outside the tabulated range take the nearest end value.
inline PotentialPair load_potential_csv(const std::string& path, const Grid& grid) {
  std::ifstream in(path);
  if (!in) throw InputError("potential csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw InputError("potential csv: empty file");
  std::string header;
  for (char ch : line)
    if (!std::isspace(static_cast<unsigned char>(ch))) header += ch;
  if (header != "x,v,q") throw InputError("potential csv: header must be x,v,q");

  std::vector<double> xs, vs, qs;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream row(line);
    std::string cell;
    double vals[3];
    for (int c = 0; c < 3; ++c) {
      if (!std::getline(row, cell, ',')) throw InputError("potential csv: line " + std::to_string(line_no) + " needs 3 columns");
      try {
        std::size_t used = 0;
        vals[c] = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw InputError("potential csv: line " + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
      if (!std::isfinite(vals[c])) throw InputError("potential csv: non-finite value at line " + std::to_string(line_no));
    }
    if (!xs.empty() && !(vals[0] > xs.back())) throw InputError("potential csv: x must be strictly increasing");
    xs.push_back(vals[0]);
    vs.push_back(vals[1]);
    qs.push_back(vals[2]);
  }
  if (xs.size() < 2) throw InputError("potential csv: need at least two rows");

  PotentialPair out{RealVector(grid.n_points()), RealVector(grid.n_points())};
  std::size_t seg = 0;
  for (int i = 0; i < grid.n_points(); ++i) {
    const double x = grid.node(i);
    if (x <= xs.front()) {
      out.v[i] = vs.front();
      out.q[i] = qs.front();
      continue;
    }
    if (x >= xs.back()) {
      out.v[i] = vs.back();
      out.q[i] = qs.back();
      continue;
    }
    while (xs[seg + 1] < x) ++seg;
    const double w = (x - xs[seg]) / (xs[seg + 1] - xs[seg]);
    out.v[i] = (1.0 - w) * vs[seg] + w * vs[seg + 1];
    out.q[i] = (1.0 - w) * qs[seg] + w * qs[seg + 1];
  }
  return out;
}

}  // namespace schro
