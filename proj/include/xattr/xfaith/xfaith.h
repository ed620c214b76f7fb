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

// Cross-lingual faithfulness.
//
// Target-language scores are projected onto the source sentence by summing,
// for every source word, the scores of the target words aligned to it. The
// per-instance Spearman correlation between source scores and projected
// scores is averaged over instances, then over target languages.

#ifndef XATTR_XFAITH_XFAITH_H_
#define XATTR_XFAITH_XFAITH_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xattr/core/types.h"

namespace xattr::xfaith {

struct ProjectedScores {
  std::string instance_id;
  std::vector<std::size_t> source_positions;  // retained source words
  std::vector<double> source;                 // their own scores
  std::vector<double> aligned;                // summed aligned target scores
  double coverage = 0.0;                      // retained / source words
};

// Unaligned source words are dropped from both vectors. Throws DataError for
// out-of-range alignment indices.
ProjectedScores project_scores(std::span<const double> source,
                               std::span<const double> target,
                               const AlignmentSet& alignment);
ProjectedScores project_scores(const AttributionVector& source,
                               const AttributionVector& target,
                               const AlignmentSet& alignment);

// Ranks starting at 1, ties get the average of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

// Spearman correlation with average-rank ties. nullopt when either vector
// has fewer than 2 entries, the lengths differ, or either is constant.
std::optional<double> spearman(std::span<const double> a,
                               std::span<const double> b);

std::optional<double> pearson(std::span<const double> a,
                              std::span<const double> b);

struct PearsonTest {
  double r = 0.0;
  double p_value = 1.0;  // two-sided, t-approximation with n - 2 dof
  std::size_t n = 0;
};
// Requires n >= 3 and non-constant inputs.
std::optional<PearsonTest> pearson_test(std::span<const double> a,
                                        std::span<const double> b);

// scores[language][instance id]
using ScoresByLanguage =
    std::map<std::string, std::map<std::string, AttributionVector>>;
// alignments[language][instance id], source -> language.
using AlignmentsByLanguage =
    std::map<std::string, std::map<std::string, AlignmentSet>>;

struct XfaithOptions {
  std::string source_language = "syn0";
  bool include_per_instance = false;
  // Worker cap; 0 means configured_threads().
  std::size_t threads = 0;
};

// Report metrics: rho_overall, skipped_count, mean_coverage,
// valid_instances, languages_defined. per_language holds each language's
// mean correlation; languages with no valid instance are listed in notes.
EvalReport crosslingual_faithfulness(
    const std::map<std::string, AttributionVector>& source_scores,
    const ScoresByLanguage& target_scores,
    const AlignmentsByLanguage& alignments, const XfaithOptions& options);

// IterMax over a uniform random similarity matrix: two rounds of mutual
// row/column argmax, zeroing the rows and columns of each round's links.
AlignmentSet random_alignments(std::size_t source_len, std::size_t target_len,
                               std::uint64_t seed);

}  // namespace xattr::xfaith

#endif  // XATTR_XFAITH_XFAITH_H_
