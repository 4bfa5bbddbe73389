/*
 * Copyright (c) 2026, the nomad-projection authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "nomad/dataset.hpp"
#include "nomad/error.hpp"

namespace nomad {

struct PlotOptions {
  double canvas = 1000.0;      // square canvas side, px
  double margin_frac = 0.02;   // margin around the data bounding box
  double radius = 1.0;         // px
};

namespace detail {

inline const char* palette_color(std::size_t index) {
  static const char* kPalette[] = {
      "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948",
      "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac", "#1b9e77", "#7570b3",
  };
  return kPalette[index % (sizeof kPalette / sizeof kPalette[0])];
}

inline std::string fmt_coord(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.8g", v);
  return buf;
}

}  // namespace detail

/// Renders the layout as a deterministic SVG scatter: one 1px circle per
/// point, isotropic scaling onto a square canvas with a 2% margin, points
/// colored by label through a fixed categorical palette (labels sorted
/// lexicographically).
inline std::string scatter_svg(const LayoutMatrix& layout,
                               const std::vector<std::string>& labels,
                               const PlotOptions& options = {}) {
  if (layout.rows == 0) fail(ErrorKind::Parameter, "nothing to plot");
  if (!labels.empty() && labels.size() != layout.rows)
    fail(ErrorKind::Parameter, "labels length != layout rows");

  double min_x = layout.row(0)[0], max_x = min_x;
  double min_y = layout.row(0)[1], max_y = min_y;
  for (std::size_t i = 1; i < layout.rows; ++i) {
    min_x = std::min(min_x, layout.row(i)[0]);
    max_x = std::max(max_x, layout.row(i)[0]);
    min_y = std::min(min_y, layout.row(i)[1]);
    max_y = std::max(max_y, layout.row(i)[1]);
  }
  const double span_x = max_x - min_x, span_y = max_y - min_y;
  const double span = std::max({span_x, span_y, 1e-12});
  const double margin = options.margin_frac * span;
  const double scale = options.canvas / (span + 2.0 * margin);
  const double offset_x =
      min_x - margin - (span - span_x) / 2.0;  // center the short axis
  const double offset_y = min_y - margin - (span - span_y) / 2.0;

  std::map<std::string, std::size_t> classes;
  if (!labels.empty()) {
    for (const std::string& label : labels) classes.emplace(label, 0);
    std::size_t index = 0;
    for (auto& entry : classes) entry.second = index++;
  }

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         detail::fmt_coord(options.canvas) + "\" height=\"" +
         detail::fmt_coord(options.canvas) + "\" viewBox=\"0 0 " +
         detail::fmt_coord(options.canvas) + " " +
         detail::fmt_coord(options.canvas) + "\">\n";
  for (std::size_t i = 0; i < layout.rows; ++i) {
    const double px = (layout.row(i)[0] - offset_x) * scale;
    const double py = options.canvas - (layout.row(i)[1] - offset_y) * scale;
    const char* fill = labels.empty()
                           ? "#4e79a7"
                           : detail::palette_color(classes.at(labels[i]));
    svg += "<circle cx=\"" + detail::fmt_coord(px) + "\" cy=\"" +
           detail::fmt_coord(py) + "\" r=\"" +
           detail::fmt_coord(options.radius) + "\" fill=\"" + fill + "\"/>\n";
  }
  svg += "</svg>\n";
  return svg;
}

inline void write_scatter_svg(const LayoutMatrix& layout,
                              const std::vector<std::string>& labels,
                              const std::string& path,
                              const PlotOptions& options = {}) {
  const std::string svg = scatter_svg(layout, labels, options);
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  out << svg;
  if (!out) fail(ErrorKind::Io, "write failed on '" + path + "'");
}

}  // namespace nomad
