// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal SVG emission for study curves, probe scatter plots and JND bars.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "mdf/common.hpp"

namespace mdfcli {

class SvgPlot {
 public:
  SvgPlot(int width = 640, int height = 480, std::string title = "")
      : w_(width), h_(height), title_(std::move(title)) {}

  void add_series(const std::string& label, std::vector<std::pair<double, double>> points,
                  bool lines = true) {
    series_.push_back({label, std::move(points), lines});
  }

  void write(const std::string& path) const {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series_)
      for (auto [x, y] : s.points) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
    if (xmin > xmax) {
      xmin = 0;
      xmax = 1;
      ymin = 0;
      ymax = 1;
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    double ml = 60, mr = 20, mt = 40, mb = 40;
    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w_ - ml - mr); };
    auto py = [&](double y) { return h_ - mb - (y - ymin) / (ymax - ymin) * (h_ - mt - mb); };

    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                   "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
    std::ofstream out(path);
    if (!out) throw mdf::RuntimeError("cannot write plot: " + path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w_ << "' height='" << h_ << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    if (!title_.empty())
      out << "<text x='" << w_ / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title_
          << "</text>\n";
    out << "<line x1='" << ml << "' y1='" << h_ - mb << "' x2='" << w_ - mr << "' y2='" << h_ - mb
        << "' stroke='black'/>\n";
    out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h_ - mb
        << "' stroke='black'/>\n";
    char buf[128];
    for (int i = 0; i <= 4; ++i) {
      double x = xmin + (xmax - xmin) * i / 4.0;
      double y = ymin + (ymax - ymin) * i / 4.0;
      std::snprintf(buf, sizeof(buf), "%.3g", x);
      out << "<text x='" << px(x) << "' y='" << h_ - mb + 16 << "' text-anchor='middle' font-size='11'>"
          << buf << "</text>\n";
      std::snprintf(buf, sizeof(buf), "%.3g", y);
      out << "<text x='" << ml - 6 << "' y='" << py(y) + 4 << "' text-anchor='end' font-size='11'>"
          << buf << "</text>\n";
    }
    for (size_t si = 0; si < series_.size(); ++si) {
      const auto& s = series_[si];
      const char* color = colors[si % 8];
      if (s.lines && s.points.size() > 1) {
        out << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
        for (auto [x, y] : s.points) out << px(x) << "," << py(y) << " ";
        out << "'/>\n";
      }
      for (auto [x, y] : s.points)
        out << "<circle cx='" << px(x) << "' cy='" << py(y) << "' r='2.5' fill='" << color
            << "'/>\n";
      out << "<text x='" << w_ - mr - 8 << "' y='" << mt + 16 * (si + 1)
          << "' text-anchor='end' font-size='12' fill='" << color << "'>" << s.label
          << "</text>\n";
    }
    out << "</svg>\n";
  }

 private:
  struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
    bool lines;
  };
  int w_, h_;
  std::string title_;
  std::vector<Series> series_;
};

/// Bar chart with symmetric error bars (JND plots).
inline void write_bar_svg(const std::string& path, const std::vector<std::string>& labels,
                          const std::vector<double>& values, const std::vector<double>& errors,
                          const std::string& title) {
  int w = 640, h = 400;
  double ml = 60, mr = 20, mt = 40, mb = 70;
  double vmax = 0.0, vmin = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    vmax = std::max(vmax, values[i] + (i < errors.size() ? errors[i] : 0.0));
    vmin = std::min(vmin, values[i] - (i < errors.size() ? errors[i] : 0.0));
  }
  if (vmax == vmin) vmax = vmin + 1;
  auto py = [&](double v) { return h - mb - (v - vmin) / (vmax - vmin) * (h - mt - mb); };
  double bw = (w - ml - mr) / std::max<size_t>(1, values.size());

  std::ofstream out(path);
  if (!out) throw mdf::RuntimeError("cannot write plot: " + path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << w / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
      << "</text>\n";
  for (size_t i = 0; i < values.size(); ++i) {
    double x0 = ml + i * bw + bw * 0.15;
    double barw = bw * 0.7;
    double y0 = py(std::max(0.0, values[i]));
    double y1 = py(std::min(0.0, values[i]));
    out << "<rect x='" << x0 << "' y='" << y0 << "' width='" << barw << "' height='"
        << std::max(1.0, y1 - y0) << "' fill='#1f77b4'/>\n";
    if (i < errors.size() && errors[i] > 0) {
      double cx = x0 + barw / 2;
      out << "<line x1='" << cx << "' y1='" << py(values[i] - errors[i]) << "' x2='" << cx
          << "' y2='" << py(values[i] + errors[i]) << "' stroke='black'/>\n";
    }
    out << "<text x='" << x0 + barw / 2 << "' y='" << h - mb + 16
        << "' text-anchor='middle' font-size='11'>" << labels[i] << "</text>\n";
  }
  out << "<line x1='" << ml << "' y1='" << py(0) << "' x2='" << w - mr << "' y2='" << py(0)
      << "' stroke='black'/>\n";
  out << "</svg>\n";
}

}  // namespace mdfcli
