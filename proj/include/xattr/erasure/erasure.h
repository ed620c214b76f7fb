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

// Erasure-based faithfulness: comprehensiveness (probability drop after
// deleting the top-ranked words) and sufficiency (drop when only they are
// kept), and their AOPC averages over bins of increasing size.
//
// Words are deleted from the sequence, not masked. A segment left empty by
// the deletion is replaced with a single [PAD] word. The class whose
// probability is tracked is the one predicted on the unmodified input.

#ifndef XATTR_ERASURE_ERASURE_H_
#define XATTR_ERASURE_ERASURE_H_

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "xattr/core/types.h"
#include "xattr/model/model.h"

namespace xattr::erasure {

using Probabilities = std::array<double, kNumClasses>;

class SequenceClassifier {
 public:
  virtual ~SequenceClassifier() = default;
  virtual Probabilities probabilities(const TokenizedPair& pair) const = 0;
};

class ModelClassifier : public SequenceClassifier {
 public:
  explicit ModelClassifier(const model::ModelParams& params)
      : params_(params) {}
  Probabilities probabilities(const TokenizedPair& pair) const override;

 private:
  const model::ModelParams& params_;
};

struct ErasureConfig {
  std::vector<double> bin_fractions = {0.01, 0.05, 0.10, 0.20, 0.50};

  // Fractions must be strictly increasing within (0, 1].
  void validate() const;
};

enum class ErasureKind { kComprehensiveness, kSufficiency };

// ceil(fraction * n) positions (at least one) with the highest scores, ties
// broken by lower index; returned in ascending index order.
std::vector<std::size_t> top_k_tokens(std::span<const double> scores,
                                      double fraction);

// Instance with the words at `positions` deleted (keep = false) or with only
// those words kept (keep = true).
TokenizedPair erase(const TokenizedPair& pair,
                    std::span<const std::size_t> positions, bool keep);

double comprehensiveness(const SequenceClassifier& classifier,
                         const TokenizedPair& pair,
                         std::span<const std::size_t> removed);
double sufficiency(const SequenceClassifier& classifier,
                   const TokenizedPair& pair,
                   std::span<const std::size_t> kept);

// Metric value for each bin, in bin order.
std::vector<double> per_bin(const SequenceClassifier& classifier,
                            const TokenizedPair& pair,
                            std::span<const double> scores,
                            const ErasureConfig& config, ErasureKind kind);
double aopc(const SequenceClassifier& classifier, const TokenizedPair& pair,
            std::span<const double> scores, const ErasureConfig& config,
            ErasureKind kind);

// Dataset-level report: aopc_comprehensiveness, aopc_sufficiency and the
// per-bin means (comprehensiveness@<fraction>, sufficiency@<fraction>).
// attributions[i] must describe pairs[i].
EvalReport erasure_report(const SequenceClassifier& classifier,
                          std::span<const TokenizedPair> pairs,
                          std::span<const AttributionVector> attributions,
                          const ErasureConfig& config);

}  // namespace xattr::erasure

#endif  // XATTR_ERASURE_ERASURE_H_
