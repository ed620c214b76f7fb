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

// File formats:
//  - datasets: JSON lines {id, language, premise[], hypothesis[], label,
//    highlight[]?}
//  - alignments: "<instance_id>\t<k-j k-j ...>" (Pharaoh pairs, zero-based)
//  - attributions: JSON lines {instance_id, language, method, output,
//    aggregation, scores[]}
//  - reports: JSON object or block CSV
//
// Every writer goes through write_file_atomic (temp file + rename).

#ifndef XATTR_CORE_IO_H_
#define XATTR_CORE_IO_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "xattr/core/types.h"

namespace xattr {

enum class ReportFormat { kJson, kCsv };
ReportFormat parse_report_format(std::string_view text);

std::vector<DatasetEntry> parse_dataset(const std::filesystem::path& path);
std::vector<DatasetEntry> parse_dataset_text(std::string_view text);
void write_dataset(const std::vector<DatasetEntry>& entries,
                   const std::filesystem::path& path);
std::string format_dataset(const std::vector<DatasetEntry>& entries);

// Languages are not part of the Pharaoh format; the caller supplies them.
std::vector<AlignmentSet> parse_alignments(
    const std::filesystem::path& path, const std::string& source_language = "",
    const std::string& target_language = "");
std::vector<AlignmentSet> parse_alignments_text(
    std::string_view text, const std::string& source_language = "",
    const std::string& target_language = "");
void write_alignments(const std::vector<AlignmentSet>& alignments,
                      const std::filesystem::path& path);
std::string format_alignments(const std::vector<AlignmentSet>& alignments);

std::vector<AttributionVector> parse_attributions(
    const std::filesystem::path& path);
std::vector<AttributionVector> parse_attributions_text(std::string_view text);
void write_attributions(const std::vector<AttributionVector>& attributions,
                        const std::filesystem::path& path);
std::string format_attributions(
    const std::vector<AttributionVector>& attributions);

void write_report(const EvalReport& report, const std::filesystem::path& path,
                  ReportFormat format);
std::string format_report(const EvalReport& report, ReportFormat format);
EvalReport parse_report(const std::filesystem::path& path, ReportFormat format);
EvalReport parse_report_text(std::string_view text, ReportFormat format);

// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);

}  // namespace xattr

#endif  // XATTR_CORE_IO_H_
