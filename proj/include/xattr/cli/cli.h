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

// Command-line frontend. Subcommands:
//   gen-corpus, train, attribute, eval-xfaith, eval-erasure, eval-plaus,
//   build-exnli, cka, sweep, report
// Every output file gets a run manifest next to it. Exit status is 0 on
// success, 1 on a usage error and 2 on a data error.

#ifndef XATTR_CLI_CLI_H_
#define XATTR_CLI_CLI_H_

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xattr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);
int run(int argc, const char* const* argv);

// The combined table written by `sweep`: one row per method/aggregation
// configuration, one column per metric and output mechanism.
struct SweepTable {
  std::vector<std::string> columns;  // e.g. rho_tp, rho_loss, ...
  std::vector<std::string> rows;     // e.g. "Saliency (L2)"
  // cells[row][column]; undefined metrics are empty.
  std::vector<std::vector<std::optional<double>>> cells;
};

std::string format_sweep_csv(const SweepTable& table);
// Throws DataError on a malformed table.
SweepTable parse_sweep_csv(std::string_view text);

}  // namespace xattr::cli

#endif  // XATTR_CLI_CLI_H_
