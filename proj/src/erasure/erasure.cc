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

#include "xattr/erasure/erasure.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "xattr/core/io.h"
#include "xattr/core/util.h"

namespace xattr::erasure {
namespace {

int predicted_class(const Probabilities& probs) {
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) -
                          probs.begin());
}

double drop(const SequenceClassifier& classifier, const TokenizedPair& pair,
            const TokenizedPair& modified) {
  const Probabilities original = classifier.probabilities(pair);
  const int j = predicted_class(original);
  return original[j] - classifier.probabilities(modified)[j];
}

std::string fraction_key(double fraction) { return format_double(fraction); }

}  // namespace

Probabilities ModelClassifier::probabilities(const TokenizedPair& pair) const {
  return model::forward(params_, pair).probabilities;
}

void ErasureConfig::validate() const {
  if (bin_fractions.empty()) {
    throw std::invalid_argument("at least one bin fraction is required");
  }
  double previous = 0.0;
  for (double f : bin_fractions) {
    if (!(f > previous && f <= 1.0)) {
      throw std::invalid_argument(
          "bin fractions must be strictly increasing within (0, 1]");
    }
    previous = f;
  }
}

std::vector<std::size_t> top_k_tokens(std::span<const double> scores,
                                      double fraction) {
  if (scores.empty()) throw std::invalid_argument("empty score vector");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("fraction must lie in (0, 1]");
  }
  // The small slack absorbs products like 0.1 * 30 = 3.0000000000000004.
  const double exact = fraction * double(scores.size());
  std::size_t k = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  k = std::clamp<std::size_t>(k, 1, scores.size());

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[a] > scores[b];
                   });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

TokenizedPair erase(const TokenizedPair& pair,
                    std::span<const std::size_t> positions, bool keep) {
  std::vector<bool> selected(pair.num_words(), false);
  for (std::size_t p : positions) {
    if (p >= selected.size()) {
      throw std::out_of_range("erasure position out of range");
    }
    selected[p] = true;
  }
  TokenizedPair out = pair;
  out.premise.clear();
  out.hypothesis.clear();
  for (std::size_t j = 0; j < pair.num_words(); ++j) {
    if (selected[j] != keep) continue;
    (j < pair.premise.size() ? out.premise : out.hypothesis)
        .push_back(pair.word(j));
  }
  if (out.premise.empty()) out.premise.emplace_back(model::kPadToken);
  if (out.hypothesis.empty()) out.hypothesis.emplace_back(model::kPadToken);
  return out;
}

double comprehensiveness(const SequenceClassifier& classifier,
                         const TokenizedPair& pair,
                         std::span<const std::size_t> removed) {
  if (removed.empty()) return 0.0;
  return drop(classifier, pair, erase(pair, removed, /*keep=*/false));
}

double sufficiency(const SequenceClassifier& classifier,
                   const TokenizedPair& pair,
                   std::span<const std::size_t> kept) {
  if (kept.size() == pair.num_words()) return 0.0;
  return drop(classifier, pair, erase(pair, kept, /*keep=*/true));
}

std::vector<double> per_bin(const SequenceClassifier& classifier,
                            const TokenizedPair& pair,
                            std::span<const double> scores,
                            const ErasureConfig& config, ErasureKind kind) {
  config.validate();
  if (scores.size() != pair.num_words()) {
    throw DataError("score count does not match word count for '" + pair.id +
                    "'");
  }
  std::vector<double> values;
  values.reserve(config.bin_fractions.size());
  for (double fraction : config.bin_fractions) {
    const std::vector<std::size_t> r = top_k_tokens(scores, fraction);
    values.push_back(kind == ErasureKind::kComprehensiveness
                         ? comprehensiveness(classifier, pair, r)
                         : sufficiency(classifier, pair, r));
  }
  return values;
}

double aopc(const SequenceClassifier& classifier, const TokenizedPair& pair,
            std::span<const double> scores, const ErasureConfig& config,
            ErasureKind kind) {
  return pairwise_mean(per_bin(classifier, pair, scores, config, kind));
}

EvalReport erasure_report(const SequenceClassifier& classifier,
                          std::span<const TokenizedPair> pairs,
                          std::span<const AttributionVector> attributions,
                          const ErasureConfig& config) {
  config.validate();
  if (pairs.size() != attributions.size()) {
    throw DataError("pairs and attributions differ in length");
  }
  if (pairs.empty()) throw DataError("no instances to evaluate");
  const std::size_t bins = config.bin_fractions.size();
  std::vector<std::vector<double>> comp(pairs.size());
  std::vector<std::vector<double>> suff(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    if (attributions[i].instance_id != pairs[i].id) {
      throw DataError("attribution/instance id mismatch at index " +
                      std::to_string(i));
    }
    comp[i] = per_bin(classifier, pairs[i], attributions[i].scores, config,
                      ErasureKind::kComprehensiveness);
    suff[i] = per_bin(classifier, pairs[i], attributions[i].scores, config,
                      ErasureKind::kSufficiency);
  });

  EvalReport report;
  std::string fractions;
  for (double f : config.bin_fractions) {
    if (!fractions.empty()) fractions += ';';
    fractions += format_double(f);
  }
  report.config["bin_fractions"] = fractions;
  report.config["instances_M"] = std::to_string(pairs.size());
  report.config["method"] = std::string(to_string(attributions[0].method));
  report.config["output"] = std::string(to_string(attributions[0].output));
  report.config["aggregation"] =
      std::string(to_string(attributions[0].aggregation));

  std::vector<double> comp_aopc(pairs.size());
  std::vector<double> suff_aopc(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    comp_aopc[i] = pairwise_mean(comp[i]);
    suff_aopc[i] = pairwise_mean(suff[i]);
  }
  report.metrics["aopc_comprehensiveness"] = pairwise_mean(comp_aopc);
  report.metrics["aopc_sufficiency"] = pairwise_mean(suff_aopc);
  for (std::size_t b = 0; b < bins; ++b) {
    std::vector<double> comp_bin(pairs.size());
    std::vector<double> suff_bin(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      comp_bin[i] = comp[i][b];
      suff_bin[i] = suff[i][b];
    }
    const std::string key = fraction_key(config.bin_fractions[b]);
    report.metrics["comprehensiveness@" + key] = pairwise_mean(comp_bin);
    report.metrics["sufficiency@" + key] = pairwise_mean(suff_bin);
  }
  return report;
}

}  // namespace xattr::erasure
