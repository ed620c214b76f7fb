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

// Domain types shared by every xattr module.
//
// Word positions are always counted over non-special words only: premise
// words first, then hypothesis words. The model input sequence is
// [CLS] premise [SEP] hypothesis [SEP]; the three specials are never
// attributed, aligned or highlighted.

#ifndef XATTR_CORE_TYPES_H_
#define XATTR_CORE_TYPES_H_

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace xattr {

// Raised for malformed input files and contract violations on data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Label { kEntailment = 0, kNeutral = 1, kContradiction = 2 };
inline constexpr int kNumClasses = 3;

std::string_view to_string(Label label);
Label parse_label(std::string_view text);  // throws DataError

enum class Method {
  kSaliency,
  kInputXGradient,
  kGuidedBackprop,
  kIntegratedGradients,
  kLime,
  kOcclusion,
  kShapleySampling,
  kActivation,
};

enum class OutputMechanism { kTopPrediction, kLoss };
enum class Aggregation { kMean, kL2, kNone };

std::string_view to_string(Method method);
std::string_view to_string(OutputMechanism output);
std::string_view to_string(Aggregation aggregation);
// Accepts the canonical names above and the short CLI spellings
// ("saliency", "ig", "tp", "loss", "l2", ...). Case-insensitive.
Method parse_method(std::string_view text);
OutputMechanism parse_output(std::string_view text);
Aggregation parse_aggregation(std::string_view text);

// True for methods that emit one score per word without aggregation.
bool is_word_level(Method method);

struct TokenizedPair {
  std::string id;
  std::string language;
  std::vector<std::string> premise;
  std::vector<std::string> hypothesis;
  Label label = Label::kNeutral;

  std::size_t num_words() const { return premise.size() + hypothesis.size(); }
  // Length of [CLS] premise [SEP] hypothesis [SEP].
  std::size_t input_length() const { return num_words() + 3; }
  std::vector<bool> special_mask() const;
  // Word at a non-special position.
  const std::string& word(std::size_t position) const;

  // Throws DataError when a segment is empty.
  void validate() const;

  friend bool operator==(const TokenizedPair&, const TokenizedPair&) = default;
};

struct HighlightMask {
  std::string instance_id;
  std::string language;
  std::vector<bool> mask;

  std::size_t count() const;
  friend bool operator==(const HighlightMask&, const HighlightMask&) = default;
};

// A dataset line: the instance plus its optional rationale annotation.
struct DatasetEntry {
  TokenizedPair pair;
  std::optional<HighlightMask> highlight;

  friend bool operator==(const DatasetEntry&, const DatasetEntry&) = default;
};

struct AttributionVector {
  std::string instance_id;
  std::string language;
  Method method = Method::kSaliency;
  OutputMechanism output = OutputMechanism::kTopPrediction;
  Aggregation aggregation = Aggregation::kL2;
  std::vector<double> scores;

  friend bool operator==(const AttributionVector&,
                         const AttributionVector&) = default;
};

struct AlignmentLink {
  std::size_t source = 0;
  std::size_t target = 0;
  friend auto operator<=>(const AlignmentLink&, const AlignmentLink&) = default;
};

struct AlignmentSet {
  std::string instance_id;
  std::string source_language;
  std::string target_language;
  std::set<AlignmentLink> pairs;

  // Throws DataError if any index falls outside the given word counts.
  void check_bounds(std::size_t source_words, std::size_t target_words) const;
  friend bool operator==(const AlignmentSet&, const AlignmentSet&) = default;
};

// Metric results plus an echo of the configuration that produced them.
// All maps are ordered so serialization is deterministic.
struct EvalReport {
  std::map<std::string, std::string> config;
  std::map<std::string, double> metrics;
  std::map<std::string, double> per_language;
  std::map<std::string, double> per_instance;
  std::map<std::string, std::string> notes;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

}  // namespace xattr

#endif  // XATTR_CORE_TYPES_H_
