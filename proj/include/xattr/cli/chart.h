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

// Minimal grouped-bar chart emitted as standalone SVG.

#ifndef XATTR_CLI_CHART_H_
#define XATTR_CLI_CHART_H_

#include <optional>
#include <string>
#include <vector>

namespace xattr::cli {

struct BarChart {
  std::string title;
  std::string y_label;
  std::vector<std::string> groups;
  std::vector<std::string> series;
  // values[group][series]; missing bars are left out.
  std::vector<std::vector<std::optional<double>>> values;
};

// Throws std::invalid_argument when `values` does not match the group and
// series counts.
std::string render_svg(const BarChart& chart);

}  // namespace xattr::cli

#endif  // XATTR_CLI_CHART_H_
