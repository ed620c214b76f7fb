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

// Linear centered kernel alignment between representation batches, and the
// batch-matching experiment: does the batch built from the translations of a
// source batch score higher than batches of unrelated target instances?

#ifndef XATTR_CKA_CKA_H_
#define XATTR_CKA_CKA_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xattr/core/types.h"
#include "xattr/model/model.h"

namespace xattr::cka {

// n x p matrix, row-major; row i belongs to ids[i].
struct RepresentationBatch {
  std::string language;
  std::vector<std::string> ids;
  std::size_t dims = 0;
  std::vector<double> values;

  std::size_t rows() const { return ids.size(); }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * dims, dims};
  }
  // Throws DataError on a shape mismatch or a non-finite entry.
  void validate() const;
  // Sub-batch with the given rows, in the given order.
  RepresentationBatch select(std::span<const std::size_t> rows) const;
};

// ||Y^T X||_F^2 / (||X^T X||_F ||Y^T Y||_F) after centering the columns.
// nullopt when either batch has zero variance. Throws DataError when the row
// counts differ or are below 2.
std::optional<double> linear_cka(const RepresentationBatch& x,
                                 const RepresentationBatch& y);

struct MatchingOptions {
  std::size_t batch_size = 8;    // n
  std::size_t random_batches = 10;  // k
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // 0: configured_threads()
};

struct MatchingResult {
  double accuracy = 0.0;
  std::size_t batches = 0;
  std::size_t wins = 0;
};

// Source and target rows are paired by position and must carry the same
// ids. Source rows are cut into consecutive batches of n (a short tail is
// dropped); each batch is compared with its matching target batch and with
// k random target batches drawn without replacement from the rows outside
// the matching batch. A batch counts as a win only if the matching CKA is
// strictly greater than every random one. Throws DataError when fewer than
// n * (k + 1) rows are available.
MatchingResult batch_matching_accuracy(const RepresentationBatch& source,
                                       const RepresentationBatch& target,
                                       const MatchingOptions& options);

// Post-activation hidden vectors of the classifier, one row per instance.
RepresentationBatch hidden_representations(
    const model::ModelParams& params, std::span<const TokenizedPair> pairs,
    const std::string& language);

// JSON lines of {"id": ..., "vector": [...]}.
RepresentationBatch parse_representations_text(std::string_view text,
                                               const std::string& language);
RepresentationBatch parse_representations(const std::filesystem::path& path,
                                          const std::string& language);
std::string format_representations(const RepresentationBatch& batch);

}  // namespace xattr::cka

#endif  // XATTR_CKA_CKA_H_
