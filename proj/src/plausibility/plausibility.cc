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

#include "xattr/plausibility/plausibility.h"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "xattr/core/io.h"
#include "xattr/core/util.h"

namespace xattr::plausibility {
namespace {

struct Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  void add(const std::vector<bool>& predicted,
           const std::vector<bool>& reference) {
    for (std::size_t j = 0; j < predicted.size(); ++j) {
      if (predicted[j] && reference[j]) ++tp;
      if (predicted[j] && !reference[j]) ++fp;
      if (!predicted[j] && reference[j]) ++fn;
    }
  }

  Prf prf() const {
    Prf out;
    if (tp + fp > 0) out.precision = double(tp) / double(tp + fp);
    if (tp + fn > 0) out.recall = double(tp) / double(tp + fn);
    if (out.precision + out.recall > 0.0) {
      out.f1 = 2.0 * out.precision * out.recall /
               (out.precision + out.recall);
    }
    return out;
  }
};

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DataError(std::string(what) + ": length mismatch (" +
                    std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (const std::string& id : ids) {
    if (!out.empty()) out += ';';
    out += id;
  }
  return out;
}

}  // namespace

std::optional<double> average_precision(std::span<const double> scores,
                                        const std::vector<bool>& gold) {
  check_lengths(scores.size(), gold.size(), "average_precision");
  const auto positives =
      static_cast<std::size_t>(std::count(gold.begin(), gold.end(), true));
  if (positives == 0) return std::nullopt;

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[a] > scores[b];
                   });
  // Recall only moves at gold positions, by 1/positives each time.
  // Extended precision so the final value is rounded once.
  long double sum = 0.0L;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (!gold[order[k]]) continue;
    ++hits;
    sum += static_cast<long double>(hits) / static_cast<long double>(k + 1);
  }
  return static_cast<double>(sum / static_cast<long double>(positives));
}

EvalReport map_score(const std::map<std::string, AttributionVector>& scores,
                     const std::map<std::string, HighlightMask>& golds,
                     bool include_per_instance) {
  std::vector<double> aps;
  std::size_t matched = 0;
  std::size_t skipped = 0;
  EvalReport report;
  for (const auto& [id, vec] : scores) {
    const auto gold = golds.find(id);
    if (gold == golds.end()) continue;
    ++matched;
    const std::optional<double> ap =
        average_precision(vec.scores, gold->second.mask);
    if (!ap) {
      ++skipped;
      continue;
    }
    aps.push_back(*ap);
    if (include_per_instance) report.per_instance[id] = *ap;
  }
  if (matched == 0) throw DataError("no instance id shared with the golds");
  if (aps.empty()) throw DataError("no instance has a gold highlight");

  const AttributionVector& first = scores.begin()->second;
  report.config["method"] = std::string(to_string(first.method));
  report.config["output"] = std::string(to_string(first.output));
  report.config["aggregation"] = std::string(to_string(first.aggregation));
  report.config["instances_M"] = std::to_string(matched);
  report.metrics["map"] = pairwise_mean(aps);
  report.metrics["skipped_count"] = double(skipped);
  report.metrics["valid_instances"] = double(aps.size());
  report.metrics["unmatched_count"] =
      double(scores.size() - matched + golds.size() - matched);
  return report;
}

std::vector<bool> binarize(std::span<const double> scores, double threshold) {
  std::vector<bool> mask(scores.size(), false);
  if (scores.empty()) return mask;
  const double max = *std::max_element(scores.begin(), scores.end());
  if (!(max > 0.0)) return mask;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    mask[j] = std::max(scores[j], 0.0) / max >= threshold;
  }
  return mask;
}

HighlightMask binarize(const AttributionVector& scores, double threshold) {
  return {scores.instance_id, scores.language,
          binarize(scores.scores, threshold)};
}

Prf highlight_prf(const std::vector<bool>& predicted,
                  const std::vector<bool>& reference) {
  check_lengths(predicted.size(), reference.size(), "highlight_prf");
  Counts counts;
  counts.add(predicted, reference);
  return counts.prf();
}

std::vector<double> default_threshold_grid() {
  std::vector<double> grid(1001);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = double(i) / 1000.0;
  return grid;
}

ThresholdSearchResult best_f1_threshold(
    std::span<const std::vector<double>> scores,
    std::span<const std::vector<bool>> golds, std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("empty threshold grid");
  check_lengths(scores.size(), golds.size(), "best_f1_threshold");
  bool any_positive = false;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    check_lengths(scores[i].size(), golds[i].size(), "best_f1_threshold");
    any_positive = any_positive ||
                   std::find(golds[i].begin(), golds[i].end(), true) !=
                       golds[i].end();
  }
  if (!any_positive) throw DataError("gold highlights have no positive word");

  ThresholdSearchResult result;
  result.grid.resize(grid.size());
  parallel_for(grid.size(), [&](std::size_t g) {
    Counts counts;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      counts.add(binarize(scores[i], grid[g]), golds[i]);
    }
    const Prf prf = counts.prf();
    result.grid[g] = {grid[g], prf.precision, prf.recall, prf.f1};
  });

  const ThresholdPoint* best = &result.grid.front();
  for (const ThresholdPoint& point : result.grid) {
    if (point.f1 > best->f1 ||
        (point.f1 == best->f1 && point.threshold < best->threshold)) {
      best = &point;
    }
  }
  result.threshold = best->threshold;
  result.f1_at_threshold = best->f1;
  return result;
}

HighlightMask project_highlights(const HighlightMask& source,
                                 const AlignmentSet& alignment,
                                 std::size_t target_words) {
  alignment.check_bounds(source.mask.size(), target_words);
  HighlightMask out;
  out.instance_id = source.instance_id;
  out.language = alignment.target_language;
  out.mask.assign(target_words, false);
  for (const AlignmentLink& link : alignment.pairs) {
    if (source.mask[link.source]) out.mask[link.target] = true;
  }
  return out;
}

ExnliResult build_exnli(const ExnliInputs& inputs) {
  ExnliResult result;
  EvalReport& report = result.report;
  report.config["source_language"] = inputs.source_language;
  report.config["threshold"] = format_double(inputs.threshold);

  // Source highlights come straight from binarizing the attributions.
  std::map<std::string, HighlightMask> source_masks;
  std::vector<DatasetEntry>& source_out =
      result.datasets[inputs.source_language];
  for (const DatasetEntry& entry : inputs.source) {
    const auto scores = inputs.source_scores.find(entry.pair.id);
    if (scores == inputs.source_scores.end()) {
      throw DataError("no source attribution for instance '" + entry.pair.id +
                      "'");
    }
    check_lengths(scores->second.scores.size(), entry.pair.num_words(),
                  "build_exnli source scores");
    HighlightMask mask = binarize(scores->second, inputs.threshold);
    mask.language = inputs.source_language;
    source_masks.emplace(entry.pair.id, mask);
    source_out.push_back({entry.pair, mask});
  }

  std::size_t omitted_total = 0;
  for (const auto& [language, entries] : inputs.targets) {
    if (language == inputs.source_language) continue;
    std::vector<DatasetEntry>& out = result.datasets[language];
    std::map<std::string, const DatasetEntry*> by_id;
    for (const DatasetEntry& entry : entries) by_id[entry.pair.id] = &entry;
    const auto lang_alignments = inputs.alignments.find(language);
    std::vector<std::string> omitted;
    for (const DatasetEntry& entry : inputs.source) {
      const std::string& id = entry.pair.id;
      const auto target = by_id.find(id);
      const AlignmentSet* alignment = nullptr;
      if (lang_alignments != inputs.alignments.end()) {
        const auto found = lang_alignments->second.find(id);
        if (found != lang_alignments->second.end()) alignment = &found->second;
      }
      if (target == by_id.end() || alignment == nullptr) {
        omitted.push_back(id);
        continue;
      }
      const TokenizedPair& pair = target->second->pair;
      HighlightMask mask =
          project_highlights(source_masks.at(id), *alignment, pair.num_words());
      mask.language = language;
      out.push_back({pair, mask});
    }
    omitted_total += omitted.size();
    if (!omitted.empty()) report.notes["omitted." + language] = join_ids(omitted);
  }

  // Reference highlights: whatever the inputs carried.
  auto references = [&](const std::string& language)
      -> std::map<std::string, const HighlightMask*> {
    std::map<std::string, const HighlightMask*> refs;
    const std::vector<DatasetEntry>* entries = nullptr;
    if (language == inputs.source_language) {
      entries = &inputs.source;
    } else if (const auto it = inputs.targets.find(language);
               it != inputs.targets.end()) {
      entries = &it->second;
    }
    if (entries == nullptr) return refs;
    for (const DatasetEntry& entry : *entries) {
      if (entry.highlight) refs[entry.pair.id] = &*entry.highlight;
    }
    return refs;
  };

  for (const auto& [language, entries] : result.datasets) {
    report.metrics["instances." + language] = double(entries.size());
    const auto refs = references(language);
    Counts counts;
    bool any = false;
    std::map<std::string, HighlightMask> masks;
    for (const DatasetEntry& entry : entries) {
      masks.emplace(entry.pair.id, *entry.highlight);
      const auto ref = refs.find(entry.pair.id);
      if (ref == refs.end()) continue;
      check_lengths(entry.highlight->mask.size(), ref->second->mask.size(),
                    "build_exnli reference");
      counts.add(entry.highlight->mask, ref->second->mask);
      any = true;
    }
    if (any) {
      const Prf prf = counts.prf();
      report.metrics["precision." + language] = prf.precision;
      report.metrics["recall." + language] = prf.recall;
      report.metrics["f1." + language] = prf.f1;
    }

    const std::map<std::string, AttributionVector>* lang_scores = nullptr;
    if (language == inputs.source_language) {
      lang_scores = &inputs.source_scores;
    } else if (const auto it = inputs.target_scores.find(language);
               it != inputs.target_scores.end()) {
      lang_scores = &it->second;
    }
    if (lang_scores == nullptr || lang_scores->empty() || masks.empty()) {
      continue;
    }
    try {
      report.per_language[language] =
          map_score(*lang_scores, masks).metrics.at("map");
    } catch (const DataError& e) {
      report.notes["map." + language] = e.what();
    }
  }
  report.metrics["omitted_count"] = double(omitted_total);
  return result;
}

}  // namespace xattr::plausibility
