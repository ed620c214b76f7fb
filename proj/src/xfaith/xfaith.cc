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

#include "xattr/xfaith/xfaith.h"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "xattr/core/io.h"
#include "xattr/core/util.h"

namespace xattr::xfaith {
namespace {

enum class Outcome { kValid, kMissing, kUndefined };

struct InstanceResult {
  Outcome outcome = Outcome::kMissing;
  double rho = 0.0;
  double coverage = 0.0;
};

std::string join(const std::vector<std::string>& parts, char separator) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += separator;
    out += parts[i];
  }
  return out;
}

}  // namespace

ProjectedScores project_scores(std::span<const double> source,
                               std::span<const double> target,
                               const AlignmentSet& alignment) {
  alignment.check_bounds(source.size(), target.size());
  std::vector<double> sums(source.size(), 0.0);
  std::vector<bool> aligned(source.size(), false);
  for (const AlignmentLink& link : alignment.pairs) {
    sums[link.source] += target[link.target];
    aligned[link.source] = true;
  }
  ProjectedScores out;
  out.instance_id = alignment.instance_id;
  for (std::size_t k = 0; k < source.size(); ++k) {
    if (!aligned[k]) continue;
    out.source_positions.push_back(k);
    out.source.push_back(source[k]);
    out.aligned.push_back(sums[k]);
  }
  out.coverage = source.empty() ? 0.0
                                : double(out.source.size()) /
                                      double(source.size());
  return out;
}

ProjectedScores project_scores(const AttributionVector& source,
                               const AttributionVector& target,
                               const AlignmentSet& alignment) {
  return project_scores(source.scores, target.scores, alignment);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                   std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(values.size());
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start + 1;
    while (end < order.size() && values[order[end]] == values[order[start]]) {
      ++end;
    }
    // Positions start..end-1 hold rank start+1..end.
    const double rank = 0.5 * double(start + 1 + end);
    for (std::size_t i = start; i < end; ++i) ranks[order[i]] = rank;
    start = end;
  }
  return ranks;
}

std::optional<double> pearson(std::span<const double> a,
                              std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) return std::nullopt;
  const double mean_a = pairwise_mean(a);
  const double mean_b = pairwise_mean(b);
  double cov = 0.0;
  double var_a = 0.0;
  double var_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a <= 0.0 || var_b <= 0.0) return std::nullopt;
  return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

std::optional<double> spearman(std::span<const double> a,
                               std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) return std::nullopt;
  const std::vector<double> rank_a = average_ranks(a);
  const std::vector<double> rank_b = average_ranks(b);
  return pearson(rank_a, rank_b);
}

std::optional<PearsonTest> pearson_test(std::span<const double> a,
                                        std::span<const double> b) {
  if (a.size() < 3) return std::nullopt;
  const std::optional<double> r = pearson(a, b);
  if (!r) return std::nullopt;
  PearsonTest test;
  test.r = *r;
  test.n = a.size();
  const double dof = double(a.size() - 2);
  if (std::abs(*r) >= 1.0) {
    test.p_value = 0.0;
    return test;
  }
  const double t = *r * std::sqrt(dof / (1.0 - *r * *r));
  const boost::math::students_t distribution(dof);
  test.p_value = 2.0 * boost::math::cdf(
                           boost::math::complement(distribution, std::abs(t)));
  return test;
}

EvalReport crosslingual_faithfulness(
    const std::map<std::string, AttributionVector>& source_scores,
    const ScoresByLanguage& target_scores,
    const AlignmentsByLanguage& alignments, const XfaithOptions& options) {
  std::vector<std::string> languages;
  for (const auto& [language, scores] : target_scores) {
    if (language != options.source_language) languages.push_back(language);
  }
  std::vector<const std::string*> ids;
  for (const auto& [id, vec] : source_scores) ids.push_back(&id);

  const std::size_t per_language = ids.size();
  std::vector<InstanceResult> results(languages.size() * per_language);
  parallel_for(
      results.size(),
      [&](std::size_t slot) {
        const std::string& language = languages[slot / per_language];
        const std::string& id = *ids[slot % per_language];
        InstanceResult& result = results[slot];
        const auto& by_id = target_scores.at(language);
        const auto target = by_id.find(id);
        const auto lang_alignments = alignments.find(language);
        if (target == by_id.end() || lang_alignments == alignments.end()) {
          return;
        }
        const auto alignment = lang_alignments->second.find(id);
        if (alignment == lang_alignments->second.end()) return;
        const ProjectedScores projected = project_scores(
            source_scores.at(id), target->second, alignment->second);
        result.coverage = projected.coverage;
        const std::optional<double> rho =
            spearman(projected.source, projected.aligned);
        if (!rho) {
          result.outcome = Outcome::kUndefined;
          return;
        }
        result.outcome = Outcome::kValid;
        result.rho = *rho;
      },
      options.threads == 0 ? configured_threads() : options.threads);

  EvalReport report;
  report.config["source_language"] = options.source_language;
  report.config["target_languages"] = join(languages, ';');
  report.config["languages_C"] = std::to_string(languages.size() + 1);
  report.config["instances_M"] = std::to_string(per_language);
  if (const auto first = source_scores.begin(); first != source_scores.end()) {
    report.config["method"] = std::string(to_string(first->second.method));
    report.config["output"] = std::string(to_string(first->second.output));
    report.config["aggregation"] =
        std::string(to_string(first->second.aggregation));
  }

  std::vector<double> language_means;
  std::vector<double> coverages;
  std::size_t skipped = 0;
  std::size_t valid_total = 0;
  std::vector<std::string> undefined_languages;
  for (std::size_t l = 0; l < languages.size(); ++l) {
    std::vector<double> rhos;
    std::size_t missing = 0;
    std::size_t undefined = 0;
    for (std::size_t i = 0; i < per_language; ++i) {
      const InstanceResult& result = results[l * per_language + i];
      if (result.outcome == Outcome::kMissing) {
        ++missing;
        continue;
      }
      coverages.push_back(result.coverage);
      if (result.outcome == Outcome::kUndefined) {
        ++undefined;
        continue;
      }
      rhos.push_back(result.rho);
      if (options.include_per_instance) {
        report.per_instance[languages[l] + "/" + *ids[i]] = result.rho;
      }
    }
    skipped += missing + undefined;
    valid_total += rhos.size();
    if (missing + undefined > 0) {
      report.notes["skipped." + languages[l]] =
          "missing=" + std::to_string(missing) +
          " undefined=" + std::to_string(undefined);
    }
    if (rhos.empty()) {
      undefined_languages.push_back(languages[l]);
      continue;
    }
    const double mean = pairwise_mean(rhos);
    report.per_language[languages[l]] = mean;
    language_means.push_back(mean);
  }
  if (!undefined_languages.empty()) {
    report.notes["undefined_languages"] = join(undefined_languages, ';');
  }
  if (!language_means.empty()) {
    report.metrics["rho_overall"] = pairwise_mean(language_means);
  } else {
    report.notes["rho_overall"] = "undefined";
  }
  report.metrics["skipped_count"] = double(skipped);
  report.metrics["valid_instances"] = double(valid_total);
  report.metrics["languages_defined"] = double(language_means.size());
  report.metrics["mean_coverage"] = pairwise_mean(coverages);
  return report;
}

AlignmentSet random_alignments(std::size_t source_len, std::size_t target_len,
                               std::uint64_t seed) {
  if (source_len == 0 || target_len == 0) {
    throw std::invalid_argument("random_alignments needs non-empty sides");
  }
  Rng rng(seed);
  std::vector<double> sim(source_len * target_len);
  for (double& s : sim) {
    do {
      s = rng.uniform();
    } while (s <= 0.0);
  }
  auto at = [&](std::size_t i, std::size_t j) -> double& {
    return sim[i * target_len + j];
  };

  AlignmentSet out;
  for (int round = 0; round < 2; ++round) {
    std::vector<std::size_t> row_best(source_len, 0);
    std::vector<std::size_t> col_best(target_len, 0);
    for (std::size_t i = 0; i < source_len; ++i) {
      for (std::size_t j = 0; j < target_len; ++j) {
        if (at(i, j) > at(i, row_best[i])) row_best[i] = j;
        if (at(i, j) > at(col_best[j], j)) col_best[j] = i;
      }
    }
    std::vector<AlignmentLink> added;
    for (std::size_t i = 0; i < source_len; ++i) {
      const std::size_t j = row_best[i];
      if (col_best[j] == i && at(i, j) > 0.0) added.push_back({i, j});
    }
    for (const AlignmentLink& link : added) {
      out.pairs.insert(link);
      for (std::size_t j = 0; j < target_len; ++j) at(link.source, j) = 0.0;
      for (std::size_t i = 0; i < source_len; ++i) at(i, link.target) = 0.0;
    }
  }
  return out;
}

}  // namespace xattr::xfaith
