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

// Plausibility: how well attribution rankings agree with gold highlights
// (MAP), plus the pieces needed to turn attributions into highlights and
// carry them to other languages through word alignments.

#ifndef XATTR_PLAUSIBILITY_PLAUSIBILITY_H_
#define XATTR_PLAUSIBILITY_PLAUSIBILITY_H_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xattr/core/types.h"

namespace xattr::plausibility {

// Average precision of the ranking induced by `scores` (descending, ties by
// lower index). nullopt when `gold` has no positive. Throws DataError when
// the lengths differ.
std::optional<double> average_precision(std::span<const double> scores,
                                        const std::vector<bool>& gold);

// Mean AP over the ids present in both maps. Instances without gold
// positives are skipped and counted. Metrics: map, skipped_count,
// valid_instances, unmatched_count (ids present in only one map). Throws DataError when no id is shared
// or no instance has a gold positive.
EvalReport map_score(const std::map<std::string, AttributionVector>& scores,
                     const std::map<std::string, HighlightMask>& golds,
                     bool include_per_instance = false);

// Scores are divided by their maximum and negatives clamped to zero, then
// mask_j = normalized_j >= threshold. A vector whose maximum is not positive
// yields an all-false mask.
std::vector<bool> binarize(std::span<const double> scores, double threshold);
HighlightMask binarize(const AttributionVector& scores, double threshold);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  friend bool operator==(const Prf&, const Prf&) = default;
};

// Zero denominators give zero. Throws DataError when the lengths differ.
Prf highlight_prf(const std::vector<bool>& predicted,
                  const std::vector<bool>& reference);

struct ThresholdPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ThresholdSearchResult {
  double threshold = 0.0;
  double f1_at_threshold = 0.0;
  std::vector<ThresholdPoint> grid;  // in grid order
};

// 0.000, 0.001, ..., 1.000.
std::vector<double> default_threshold_grid();

// Micro-averaged F1 over all words of all instances for each grid value;
// the best F1 wins, ties go to the lowest threshold. Throws
// std::invalid_argument for an empty grid and DataError when the gold masks
// have no positive at all or lengths differ.
ThresholdSearchResult best_f1_threshold(
    std::span<const std::vector<double>> scores,
    std::span<const std::vector<bool>> golds, std::span<const double> grid);

// Target word is highlighted iff it is aligned to a highlighted source word.
HighlightMask project_highlights(const HighlightMask& source,
                                 const AlignmentSet& alignment,
                                 std::size_t target_words);

struct ExnliInputs {
  std::string source_language;
  // Source-language instances and their attributions.
  std::vector<DatasetEntry> source;
  std::map<std::string, AttributionVector> source_scores;
  // Target-language instances, keyed by language. Existing highlight fields
  // serve as the reference for precision/recall/F1.
  std::map<std::string, std::vector<DatasetEntry>> targets;
  // alignments[language][instance id], source -> language.
  std::map<std::string, std::map<std::string, AlignmentSet>> alignments;
  // Optional attributions computed in the target languages; when present the
  // report includes their MAP against the projected highlights.
  std::map<std::string, std::map<std::string, AttributionVector>>
      target_scores;
  double threshold = 0.0;
};

struct ExnliResult {
  // Highlighted datasets, source language included.
  std::map<std::string, std::vector<DatasetEntry>> datasets;
  // per_language: MAP of each language's attributions against its
  // highlights (languages with attributions only).
  // metrics: precision.<lang>, recall.<lang>, f1.<lang> against reference
  // highlights (micro-averaged, languages with references only),
  // instances.<lang>, omitted_count.
  // notes: omitted.<lang> lists instances dropped for lack of an alignment
  // or target instance.
  EvalReport report;
};

ExnliResult build_exnli(const ExnliInputs& inputs);

}  // namespace xattr::plausibility

#endif  // XATTR_PLAUSIBILITY_PLAUSIBILITY_H_
