/*
 * Copyright 2026 The xattr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "xattr/cli/chart.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace xattr::cli {
namespace {

constexpr std::array<const char*, 6> kPalette = {
    "#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"};

constexpr double kWidthPerGroup = 90.0;
constexpr double kPlotHeight = 260.0;
constexpr double kLeft = 60.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 110.0;
constexpr double kLegendWidth = 140.0;

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

std::string render_svg(const BarChart& chart) {
  if (chart.values.size() != chart.groups.size()) {
    throw std::invalid_argument("chart values do not match groups");
  }
  for (const auto& row : chart.values) {
    if (row.size() != chart.series.size()) {
      throw std::invalid_argument("chart values do not match series");
    }
  }

  double lo = 0.0;
  double hi = 0.0;
  for (const auto& row : chart.values) {
    for (const auto& v : row) {
      if (v && std::isfinite(*v)) {
        lo = std::min(lo, *v);
        hi = std::max(hi, *v);
      }
    }
  }
  if (hi - lo <= 0.0) hi = lo + 1.0;
  const double span = hi - lo;
  auto y_of = [&](double v) { return kTop + (hi - v) / span * kPlotHeight; };

  const double plot_width =
      kWidthPerGroup * double(std::max<std::size_t>(chart.groups.size(), 1));
  const double width = kLeft + plot_width + kLegendWidth;
  const double height = kTop + kPlotHeight + kBottom;

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) +
       "\" height=\"" + num(height) + "\" font-family=\"sans-serif\" "
       "font-size=\"11\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(width / 2) + "\" y=\"20\" text-anchor=\"middle\" "
       "font-size=\"14\">" + escape(chart.title) + "</text>\n";
  s += "<text transform=\"translate(15," + num(kTop + kPlotHeight / 2) +
       ") rotate(-90)\" text-anchor=\"middle\">" + escape(chart.y_label) +
       "</text>\n";

  for (int i = 0; i <= 4; ++i) {
    const double v = lo + span * i / 4.0;
    const double y = y_of(v);
    s += "<line x1=\"" + num(kLeft) + "\" x2=\"" + num(kLeft + plot_width) +
         "\" y1=\"" + num(y) + "\" y2=\"" + num(y) +
         "\" stroke=\"#dddddd\"/>\n";
    s += "<text x=\"" + num(kLeft - 5) + "\" y=\"" + num(y + 4) +
         "\" text-anchor=\"end\">" + tick(v) + "</text>\n";
  }
  const double zero = y_of(0.0);
  s += "<line x1=\"" + num(kLeft) + "\" x2=\"" + num(kLeft + plot_width) +
       "\" y1=\"" + num(zero) + "\" y2=\"" + num(zero) +
       "\" stroke=\"black\"/>\n";

  const std::size_t series = std::max<std::size_t>(chart.series.size(), 1);
  const double bar = (kWidthPerGroup - 20.0) / double(series);
  for (std::size_t g = 0; g < chart.groups.size(); ++g) {
    const double x0 = kLeft + kWidthPerGroup * double(g) + 10.0;
    for (std::size_t k = 0; k < chart.series.size(); ++k) {
      const auto& v = chart.values[g][k];
      if (!v || !std::isfinite(*v)) continue;
      const double y = std::min(y_of(*v), zero);
      const double h = std::abs(y_of(*v) - zero);
      s += "<rect x=\"" + num(x0 + bar * double(k)) + "\" y=\"" + num(y) +
           "\" width=\"" + num(bar) + "\" height=\"" + num(h) +
           "\" fill=\"" + kPalette[k % kPalette.size()] + "\"><title>" +
           escape(chart.groups[g] + " / " + chart.series[k]) + ": " +
           tick(*v) + "</title></rect>\n";
    }
    const double cx = x0 + (kWidthPerGroup - 20.0) / 2.0;
    const double cy = kTop + kPlotHeight + 12.0;
    s += "<text transform=\"translate(" + num(cx) + "," + num(cy) +
         ") rotate(35)\">" + escape(chart.groups[g]) + "</text>\n";
  }

  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const double x = kLeft + plot_width + 15.0;
    const double y = kTop + 18.0 * double(k);
    s += "<rect x=\"" + num(x) + "\" y=\"" + num(y) +
         "\" width=\"12\" height=\"12\" fill=\"" +
         kPalette[k % kPalette.size()] + "\"/>\n";
    s += "<text x=\"" + num(x + 18) + "\" y=\"" + num(y + 10) + "\">" +
         escape(chart.series[k]) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace xattr::cli
