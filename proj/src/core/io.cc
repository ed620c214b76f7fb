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

#include "xattr/core/io.h"

#include <unistd.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

#include "json.hpp"

namespace xattr {
namespace {

using Json = nlohmann::ordered_json;

std::string at_line(std::size_t line) {
  return " at line " + std::to_string(line);
}

// Calls fn(line_number, line) for every non-blank line.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_number = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_number;
    if (line.find_first_not_of(" \t") != std::string_view::npos) {
      fn(line_number, line);
    }
    start = end + 1;
  }
}

std::vector<std::string> word_array(const Json& object, const char* field,
                                    std::size_t line) {
  if (!object.contains(field) || !object[field].is_array()) {
    throw DataError(std::string("missing word array '") + field + "'" +
                    at_line(line));
  }
  std::vector<std::string> words;
  for (const Json& word : object[field]) {
    if (!word.is_string()) {
      throw DataError(std::string("non-string word in '") + field + "'" +
                      at_line(line));
    }
    words.push_back(word.get<std::string>());
  }
  return words;
}

std::string string_field(const Json& object, const char* field,
                         std::size_t line) {
  if (!object.contains(field) || !object[field].is_string()) {
    throw DataError(std::string("missing string field '") + field + "'" +
                    at_line(line));
  }
  return object[field].get<std::string>();
}

std::size_t parse_index(std::string_view text, std::size_t line) {
  if (!text.empty() && text.front() == '-') {
    throw DataError("negative alignment index" + at_line(line));
  }
  std::size_t value = 0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw DataError("non-integer alignment index '" + std::string(text) + "'" +
                    at_line(line));
  }
  return value;
}

void require_finite(double value, const std::string& what) {
  if (!std::isfinite(value)) {
    throw DataError("non-finite value for '" + what + "'");
  }
}

// --- block CSV for reports ---------------------------------------------------

std::string csv_field(const std::string& value) {
  if (value.find_first_of("\r\n") != std::string::npos) {
    throw DataError("report values may not contain newlines");
  }
  if (value.find_first_of(",\"") == std::string::npos) return value;
  std::string quoted = "\"";
  for (char c : value) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

std::vector<std::string> split_csv_row(std::string_view row,
                                       std::size_t line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < row.size(); ++i) {
    const char c = row[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < row.size() && row[i + 1] == '"') {
          fields.back() += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw DataError("unterminated quote" + at_line(line));
  return fields;
}

double parse_double(const std::string& text, std::size_t line) {
  double value = 0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw DataError("invalid number '" + text + "'" + at_line(line));
  }
  return value;
}

constexpr const char* kConfigHeader = "config,value";
constexpr const char* kMetricHeader = "metric,value";
constexpr const char* kLanguageHeader = "language,value";
constexpr const char* kInstanceHeader = "instance,value";
constexpr const char* kNoteHeader = "note,value";

template <typename Map, typename Fmt>
void csv_block(std::ostringstream& out, bool& first, const char* header,
               const Map& values, Fmt&& fmt) {
  if (values.empty()) return;
  if (!first) out << '\n';
  first = false;
  out << header << '\n';
  for (const auto& [key, value] : values) {
    out << csv_field(key) << ',' << csv_field(fmt(value)) << '\n';
  }
}

std::string format_report_csv(const EvalReport& report) {
  std::ostringstream out;
  bool first = true;
  auto text = [](const std::string& v) { return v; };
  auto number = [](double v) { return format_double(v); };
  csv_block(out, first, kConfigHeader, report.config, text);
  csv_block(out, first, kMetricHeader, report.metrics, number);
  csv_block(out, first, kLanguageHeader, report.per_language, number);
  csv_block(out, first, kInstanceHeader, report.per_instance, number);
  csv_block(out, first, kNoteHeader, report.notes, text);
  return out.str();
}

EvalReport parse_report_csv(std::string_view text) {
  EvalReport report;
  std::string block;
  std::size_t line_number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_number;
    start = end + 1;
    if (line.empty()) {
      block.clear();
      continue;
    }
    if (block.empty()) {
      block = std::string(line);
      if (block != kConfigHeader && block != kMetricHeader &&
          block != kLanguageHeader && block != kInstanceHeader &&
          block != kNoteHeader) {
        throw DataError("unknown report block '" + block + "'" +
                        at_line(line_number));
      }
      continue;
    }
    const std::vector<std::string> fields = split_csv_row(line, line_number);
    if (fields.size() != 2) {
      throw DataError("expected two fields" + at_line(line_number));
    }
    const std::string& key = fields[0];
    const std::string& value = fields[1];
    if (block == kConfigHeader) {
      report.config[key] = value;
    } else if (block == kMetricHeader) {
      report.metrics[key] = parse_double(value, line_number);
    } else if (block == kLanguageHeader) {
      report.per_language[key] = parse_double(value, line_number);
    } else if (block == kInstanceHeader) {
      report.per_instance[key] = parse_double(value, line_number);
    } else {
      report.notes[key] = value;
    }
  }
  return report;
}

}  // namespace

ReportFormat parse_report_format(std::string_view text) {
  if (text == "json") return ReportFormat::kJson;
  if (text == "csv") return ReportFormat::kCsv;
  throw DataError("unknown report format '" + std::string(text) + "'");
}

std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream contents;
  contents << in.rdbuf();
  return contents.str();
}

void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  fs::path temp = path;
  temp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw DataError("write failed for '" + path.string() + "'");
  }
  std::error_code ec;
  fs::rename(temp, path, ec);
  if (ec) {
    fs::remove(temp, ec);
    throw DataError("cannot replace '" + path.string() + "'");
  }
}

// --- datasets ---------------------------------------------------------------

std::vector<DatasetEntry> parse_dataset_text(std::string_view text) {
  std::vector<DatasetEntry> entries;
  for_each_line(text, [&](std::size_t line, std::string_view content) {
    Json object;
    try {
      object = Json::parse(content);
    } catch (const Json::parse_error&) {
      throw DataError("malformed JSON" + at_line(line));
    }
    if (!object.is_object()) throw DataError("expected object" + at_line(line));

    DatasetEntry entry;
    TokenizedPair& pair = entry.pair;
    pair.id = string_field(object, "id", line);
    pair.language = string_field(object, "language", line);
    pair.premise = word_array(object, "premise", line);
    pair.hypothesis = word_array(object, "hypothesis", line);
    const std::string label = string_field(object, "label", line);
    try {
      pair.label = parse_label(label);
    } catch (const DataError&) {
      throw DataError("unknown label" + at_line(line));
    }
    if (pair.premise.empty() || pair.hypothesis.empty()) {
      throw DataError("empty premise or hypothesis" + at_line(line));
    }
    if (object.contains("highlight") && !object["highlight"].is_null()) {
      const Json& array = object["highlight"];
      if (!array.is_array()) {
        throw DataError("highlight must be an array" + at_line(line));
      }
      HighlightMask mask{pair.id, pair.language, {}};
      for (const Json& flag : array) {
        if (!flag.is_boolean()) {
          throw DataError("highlight entries must be booleans" +
                          at_line(line));
        }
        mask.mask.push_back(flag.get<bool>());
      }
      if (mask.mask.size() != pair.num_words()) {
        throw DataError("highlight length " +
                        std::to_string(mask.mask.size()) +
                        " does not match word count " +
                        std::to_string(pair.num_words()) + at_line(line));
      }
      entry.highlight = std::move(mask);
    }
    entries.push_back(std::move(entry));
  });
  return entries;
}

std::vector<DatasetEntry> parse_dataset(const std::filesystem::path& path) {
  return parse_dataset_text(read_file(path));
}

std::string format_dataset(const std::vector<DatasetEntry>& entries) {
  std::string out;
  for (const DatasetEntry& entry : entries) {
    Json object;
    object["id"] = entry.pair.id;
    object["language"] = entry.pair.language;
    object["premise"] = entry.pair.premise;
    object["hypothesis"] = entry.pair.hypothesis;
    object["label"] = std::string(to_string(entry.pair.label));
    if (entry.highlight) {
      if (entry.highlight->mask.size() != entry.pair.num_words()) {
        throw DataError("highlight length mismatch for '" + entry.pair.id +
                        "'");
      }
      Json flags = Json::array();
      for (bool flag : entry.highlight->mask) flags.push_back(flag);
      object["highlight"] = std::move(flags);
    }
    out += object.dump();
    out += '\n';
  }
  return out;
}

void write_dataset(const std::vector<DatasetEntry>& entries,
                   const std::filesystem::path& path) {
  write_file_atomic(path, format_dataset(entries));
}

// --- alignments -------------------------------------------------------------

std::vector<AlignmentSet> parse_alignments_text(
    std::string_view text, const std::string& source_language,
    const std::string& target_language) {
  std::vector<AlignmentSet> alignments;
  for_each_line(text, [&](std::size_t line, std::string_view content) {
    const std::size_t tab = content.find('\t');
    if (tab == std::string_view::npos || tab == 0) {
      throw DataError("expected '<id>\\t<pairs>'" + at_line(line));
    }
    AlignmentSet set;
    set.instance_id = std::string(content.substr(0, tab));
    set.source_language = source_language;
    set.target_language = target_language;
    std::istringstream tokens{std::string(content.substr(tab + 1))};
    std::string token;
    while (tokens >> token) {
      const std::size_t dash = token.find('-', 1);
      if (token.front() == '-') {
        throw DataError("negative alignment index" + at_line(line));
      }
      if (dash == std::string::npos) {
        throw DataError("malformed pair '" + token + "'" + at_line(line));
      }
      set.pairs.insert(
          {parse_index(std::string_view(token).substr(0, dash), line),
           parse_index(std::string_view(token).substr(dash + 1), line)});
    }
    alignments.push_back(std::move(set));
  });
  return alignments;
}

std::vector<AlignmentSet> parse_alignments(const std::filesystem::path& path,
                                           const std::string& source_language,
                                           const std::string& target_language) {
  return parse_alignments_text(read_file(path), source_language,
                               target_language);
}

std::string format_alignments(const std::vector<AlignmentSet>& alignments) {
  std::string out;
  for (const AlignmentSet& set : alignments) {
    out += set.instance_id;
    out += '\t';
    bool first = true;
    for (const AlignmentLink& link : set.pairs) {
      if (!first) out += ' ';
      first = false;
      out += std::to_string(link.source) + "-" + std::to_string(link.target);
    }
    out += '\n';
  }
  return out;
}

void write_alignments(const std::vector<AlignmentSet>& alignments,
                      const std::filesystem::path& path) {
  write_file_atomic(path, format_alignments(alignments));
}

// --- attributions -----------------------------------------------------------

std::vector<AttributionVector> parse_attributions_text(std::string_view text) {
  std::vector<AttributionVector> out;
  for_each_line(text, [&](std::size_t line, std::string_view content) {
    Json object;
    try {
      object = Json::parse(content);
    } catch (const Json::parse_error&) {
      throw DataError("malformed JSON" + at_line(line));
    }
    AttributionVector vec;
    try {
      vec.instance_id = string_field(object, "instance_id", line);
      vec.language = string_field(object, "language", line);
      vec.method = parse_method(string_field(object, "method", line));
      vec.output = parse_output(string_field(object, "output", line));
      vec.aggregation =
          parse_aggregation(string_field(object, "aggregation", line));
    } catch (const DataError& e) {
      const std::string message = e.what();
      if (message.find(" at line ") != std::string::npos) throw;
      throw DataError(message + at_line(line));
    }
    if (!object.contains("scores") || !object["scores"].is_array()) {
      throw DataError("missing scores" + at_line(line));
    }
    for (const Json& score : object["scores"]) {
      if (!score.is_number()) {
        throw DataError("non-numeric score" + at_line(line));
      }
      vec.scores.push_back(score.get<double>());
    }
    out.push_back(std::move(vec));
  });
  return out;
}

std::vector<AttributionVector> parse_attributions(
    const std::filesystem::path& path) {
  return parse_attributions_text(read_file(path));
}

std::string format_attributions(
    const std::vector<AttributionVector>& attributions) {
  std::string out;
  for (const AttributionVector& vec : attributions) {
    Json object;
    object["instance_id"] = vec.instance_id;
    object["language"] = vec.language;
    object["method"] = std::string(to_string(vec.method));
    object["output"] = std::string(to_string(vec.output));
    object["aggregation"] = std::string(to_string(vec.aggregation));
    for (double score : vec.scores) require_finite(score, vec.instance_id);
    object["scores"] = vec.scores;
    out += object.dump();
    out += '\n';
  }
  return out;
}

void write_attributions(const std::vector<AttributionVector>& attributions,
                        const std::filesystem::path& path) {
  write_file_atomic(path, format_attributions(attributions));
}

// --- reports ----------------------------------------------------------------

std::string format_report(const EvalReport& report, ReportFormat format) {
  for (const auto& [key, value] : report.metrics) require_finite(value, key);
  for (const auto& [key, value] : report.per_language) {
    require_finite(value, key);
  }
  for (const auto& [key, value] : report.per_instance) {
    require_finite(value, key);
  }
  if (format == ReportFormat::kCsv) return format_report_csv(report);

  Json object;
  object["config"] = Json::object();
  for (const auto& [key, value] : report.config) object["config"][key] = value;
  object["metrics"] = Json::object();
  for (const auto& [key, value] : report.metrics) {
    object["metrics"][key] = value;
  }
  object["per_language"] = Json::object();
  for (const auto& [key, value] : report.per_language) {
    object["per_language"][key] = value;
  }
  if (!report.per_instance.empty()) {
    for (const auto& [key, value] : report.per_instance) {
      object["per_instance"][key] = value;
    }
  }
  if (!report.notes.empty()) {
    for (const auto& [key, value] : report.notes) object["notes"][key] = value;
  }
  return object.dump(2) + "\n";
}

void write_report(const EvalReport& report, const std::filesystem::path& path,
                  ReportFormat format) {
  write_file_atomic(path, format_report(report, format));
}

EvalReport parse_report_text(std::string_view text, ReportFormat format) {
  if (format == ReportFormat::kCsv) return parse_report_csv(text);
  Json object;
  try {
    object = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw DataError(std::string("malformed report JSON: ") + e.what());
  }
  EvalReport report;
  auto strings = [&](const char* key, std::map<std::string, std::string>& to) {
    if (!object.contains(key)) return;
    for (const auto& [name, value] : object[key].items()) {
      to[name] = value.get<std::string>();
    }
  };
  auto numbers = [&](const char* key, std::map<std::string, double>& to) {
    if (!object.contains(key)) return;
    for (const auto& [name, value] : object[key].items()) {
      if (!value.is_number()) {
        throw DataError("non-numeric report value for '" + name + "'");
      }
      to[name] = value.get<double>();
    }
  };
  try {
    strings("config", report.config);
    numbers("metrics", report.metrics);
    numbers("per_language", report.per_language);
    numbers("per_instance", report.per_instance);
    strings("notes", report.notes);
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
  return report;
}

EvalReport parse_report(const std::filesystem::path& path,
                        ReportFormat format) {
  return parse_report_text(read_file(path), format);
}

}  // namespace xattr
