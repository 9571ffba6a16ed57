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

// Result persistence: round-trip decimal formatting, CSV tables, static
// SVG line plots and atomic output directories.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "schro/error.hpp"
#include "schro/lyapunov.hpp"

namespace schro::io {

/// Shortest decimal string that parses back to exactly `x`.
inline std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw Error("format_real: conversion failed");
  return std::string(buf, ptr);
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

inline std::string to_csv(const Table& table) {
  if (table.header.size() != table.columns.size()) throw InputError("csv: header/column count mismatch");
  for (const auto& col : table.columns)
    if (col.size() != table.rows()) throw InputError("csv: ragged columns");
  std::string out;
  for (std::size_t c = 0; c < table.header.size(); ++c) out += (c ? "," : "") + table.header[c];
  out += '\n';
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      if (c) out += ',';
      out += format_real(table.columns[c][r]);
    }
    out += '\n';
  }
  return out;
}

/// Closed-loop trajectory, thinned to every `every`-th row plus the last.
inline Table closed_loop_table(const ClosedLoopRecord& rec, std::size_t every = 1) {
  Table t{{"t", "lyapunov", "control", "pop_target", "norm_l2", "norm_h2"}, std::vector<std::vector<double>>(6)};
  every = std::max<std::size_t>(every, 1);
  for (std::size_t k = 0; k < rec.rows(); ++k) {
    if (k % every != 0 && k + 1 != rec.rows()) continue;
    t.columns[0].push_back(rec.times[k]);
    t.columns[1].push_back(rec.lyapunov[k]);
    t.columns[2].push_back(rec.control[k]);
    t.columns[3].push_back(rec.target_population[k]);
    t.columns[4].push_back(rec.norm_l2[k]);
    t.columns[5].push_back(rec.norm_h2[k]);
  }
  return t;
}

inline Table control_table(const ControlSignal& u) {
  Table t{{"t", "u"}, std::vector<std::vector<double>>(2)};
  for (std::size_t k = 0; k < u.steps(); ++k) {
    t.columns[0].push_back(static_cast<double>(k) * u.dt);
    t.columns[1].push_back(u.values[k]);
  }
  return t;
}

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
};

namespace detail {

inline std::string escape_xml(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

inline std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string tick(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace detail

/// Static SVG 1.1 line plot; output depends only on the data.
inline std::string svg_line_plot(const PlotSpec& spec, const std::vector<Series>& series) {
  constexpr double width = 640, height = 420, left = 70, right = 20, top = 40, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;
  auto ty = [&](double y) { return spec.log_y ? std::log10(y) : y; };

  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (spec.log_y && !(s.y[i] > 0))) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + ph - (ty(y) - y0) / (y1 - y0) * ph; };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
     << detail::escape_xml(spec.title) << "</text>\n"
     << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = x0 + (x1 - x0) * k / 4.0;
    const double fy = y0 + (y1 - y0) * k / 4.0;
    const double gx = left + pw * k / 4.0;
    const double gy = top + ph - ph * k / 4.0;
    os << "<text x=\"" << detail::fixed(gx) << "\" y=\"" << detail::fixed(top + ph + 18)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << detail::tick(fx) << "</text>\n";
    os << "<text x=\"" << detail::fixed(left - 6) << "\" y=\"" << detail::fixed(gy + 4)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
       << detail::tick(spec.log_y ? std::pow(10.0, fy) : fy) << "</text>\n";
  }
  os << "<text x=\"" << width / 2 << "\" y=\"" << height - 10
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << detail::escape_xml(spec.x_label)
     << "</text>\n"
     << "<text x=\"16\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 16 " << top + ph / 2
     << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << detail::escape_xml(spec.y_label)
     << (spec.log_y ? " (log)" : "") << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = colors[si % 5];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (spec.log_y && !(s.y[i] > 0))) continue;
      os << (first ? "" : " ") << detail::fixed(px(s.x[i])) << ',' << detail::fixed(py(s.y[i]));
      first = false;
    }
    os << "\"/>\n";
    os << "<text x=\"" << detail::fixed(left + 10) << "\" y=\"" << detail::fixed(top + 16 + 14.0 * static_cast<double>(si))
       << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << color << "\">" << detail::escape_xml(s.label)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

/// Collects files in a temporary sibling directory and moves it into place
/// on commit(); an abandoned stage is removed on destruction.
class StagedDirectory {
 public:
  explicit StagedDirectory(std::filesystem::path target) : target_(std::move(target)) {
    namespace fs = std::filesystem;
    if (target_.empty()) throw InputError("output directory must not be empty");
    const auto parent = fs::absolute(target_).parent_path();
    fs::create_directories(parent);
    stage_ = parent / (target_.filename().string() + ".staging");
    std::error_code ec;
    fs::remove_all(stage_, ec);
    fs::create_directories(stage_);
  }

  StagedDirectory(const StagedDirectory&) = delete;
  StagedDirectory& operator=(const StagedDirectory&) = delete;

  ~StagedDirectory() {
    if (!committed_) {
      std::error_code ec;
      std::filesystem::remove_all(stage_, ec);
    }
  }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(stage_ / name, std::ios::binary);
    if (!out) throw Error("cannot write " + (stage_ / name).string());
    out << content;
    if (!out) throw Error("write failed for " + (stage_ / name).string());
    files_.push_back(name);
  }

  const std::vector<std::string>& files() const noexcept { return files_; }

  /// Replaces any previous contents of the target directory.
  void commit() {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::remove_all(target_, ec);
    fs::rename(stage_, target_);
    committed_ = true;
  }

 private:
  std::filesystem::path target_;
  std::filesystem::path stage_;
  std::vector<std::string> files_;
  bool committed_ = false;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace schro::io
