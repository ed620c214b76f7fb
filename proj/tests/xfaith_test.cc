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

#include <cmath>
#include <numbers>
#include <numeric>

#include <gtest/gtest.h>

#include "test_util.h"
#include "xattr/attribution/attribution.h"
#include "xattr/xfaith/xfaith.h"

namespace xattr::xfaith {
namespace {

// Rank of v[i]: 1 + (# smaller) + (# equal others) / 2.
std::vector<double> oracle_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0.0;
    double equal = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) less += 1.0;
      if (j != i && v[j] == v[i]) equal += 1.0;
    }
    r[i] = 1.0 + less + equal / 2.0;
  }
  return r;
}

double oracle_pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = double(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

AttributionVector vec(const std::string& id, const std::string& lang,
                      std::vector<double> scores) {
  AttributionVector v;
  v.instance_id = id;
  v.language = lang;
  v.scores = std::move(scores);
  return v;
}

AlignmentSet identity(const std::string& id, const std::string& lang,
                      std::size_t n) {
  AlignmentSet a;
  a.instance_id = id;
  a.source_language = "syn0";
  a.target_language = lang;
  for (std::size_t k = 0; k < n; ++k) a.pairs.insert({k, k});
  return a;
}

struct Bench {
  std::map<std::string, AttributionVector> source;
  ScoresByLanguage targets;
  AlignmentsByLanguage alignments;
};

// Source scores are standard normal; each target score is replaced by an
// independent draw with probability q, otherwise copied.
Bench noisy_bench(std::size_t instances, std::size_t words,
                  const std::vector<std::string>& languages, double q,
                  std::uint64_t seed) {
  Rng rng(seed);
  Bench b;
  for (std::size_t i = 0; i < instances; ++i) {
    const std::string id = "i" + std::to_string(i);
    auto src = ::xattr::testing::random_vector(rng, words);
    b.source[id] = vec(id, "syn0", src);
    for (const auto& lang : languages) {
      std::vector<double> tgt = src;
      for (double& x : tgt) {
        if (rng.uniform() < q) x = rng.normal();
      }
      b.targets[lang][id] = vec(id, lang, tgt);
      b.alignments[lang][id] = identity(id, lang, words);
    }
  }
  return b;
}

double rho(const Bench& b) {
  return crosslingual_faithfulness(b.source, b.targets, b.alignments, {})
      .metrics.at("rho_overall");
}

TEST(RanksTest, MatchesBruteForceWithTies) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + rng.below(12));
    for (double& x : v) x = double(rng.below(5));
    EXPECT_EQ(average_ranks(v), oracle_ranks(v));
  }
}

TEST(SpearmanTest, HandExamples) {
  EXPECT_NEAR(*spearman(std::vector<double>{1, 2, 3},
                        std::vector<double>{10, 20, 30}),
              1.0, 1e-12);
  EXPECT_NEAR(*spearman(std::vector<double>{1, 2, 3},
                        std::vector<double>{3, 2, 1}),
              -1.0, 1e-12);
  const std::vector<double> a = {1, 2, 2, 3};
  const std::vector<double> b = {1, 3, 2, 4};
  EXPECT_NEAR(*spearman(a, b), oracle_pearson(oracle_ranks(a), oracle_ranks(b)),
              1e-12);
}

TEST(SpearmanTest, UndefinedCases) {
  EXPECT_FALSE(spearman(std::vector<double>{1}, std::vector<double>{1}));
  EXPECT_FALSE(spearman(std::vector<double>{1, 1, 1},
                        std::vector<double>{1, 2, 3}));
  EXPECT_FALSE(spearman(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}));
}

TEST(SpearmanTest, RandomAgainstOracleAndMonotoneInvariance) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(15);
    std::vector<double> a(n), b(n);
    for (double& x : a) x = double(rng.below(6));
    for (double& x : b) x = rng.normal();
    const auto r = spearman(a, b);
    if (!r) continue;
    EXPECT_GE(*r, -1.0);
    EXPECT_LE(*r, 1.0);
    EXPECT_NEAR(*r, oracle_pearson(oracle_ranks(a), oracle_ranks(b)), 1e-12);
    std::vector<double> eb(n);
    for (std::size_t i = 0; i < n; ++i) eb[i] = std::exp(b[i]) + 3.0;
    EXPECT_NEAR(*spearman(a, eb), *r, 1e-12);
  }
}

TEST(PearsonTest, PValueMatchesClosedFormStudentT) {
  // With one degree of freedom the t distribution is Cauchy; with two its
  // CDF is t / (2 sqrt(2 + t^2)) + 1/2.
  const std::vector<double> a3 = {1, 2, 3};
  const std::vector<double> b3 = {1, 3, 2};
  const auto t3 = pearson_test(a3, b3);
  ASSERT_TRUE(t3);
  const double r3 = oracle_pearson(a3, b3);
  const double stat3 = r3 * std::sqrt(1.0 / (1.0 - r3 * r3));
  EXPECT_NEAR(t3->r, r3, 1e-12);
  EXPECT_NEAR(t3->p_value,
              1.0 - 2.0 * std::atan(std::abs(stat3)) / std::numbers::pi, 1e-9);
  EXPECT_EQ(t3->n, 3u);

  const std::vector<double> a4 = {1, 2, 3, 4};
  const std::vector<double> b4 = {2, 1, 4, 3.5};
  const auto t4 = pearson_test(a4, b4);
  ASSERT_TRUE(t4);
  const double r4 = oracle_pearson(a4, b4);
  const double stat4 = r4 * std::sqrt(2.0 / (1.0 - r4 * r4));
  EXPECT_NEAR(t4->p_value, 1.0 - std::abs(stat4) / std::sqrt(2.0 + stat4 * stat4),
              1e-9);
  EXPECT_FALSE(pearson_test(std::vector<double>{1, 2}, std::vector<double>{2, 1}));
}

TEST(ProjectTest, ManyToOneAlignmentSums) {
  // Source word 1 aligns to target words 1 and 2.
  AlignmentSet a;
  a.pairs = {{0, 0}, {1, 1}, {1, 2}};
  const std::vector<double> src = {0.4, 0.9};
  const std::vector<double> tgt = {0.3, 0.25, 0.5};
  const ProjectedScores p = project_scores(src, tgt, a);
  EXPECT_EQ(p.source, src);
  EXPECT_DOUBLE_EQ(p.aligned[0], 0.3);
  EXPECT_DOUBLE_EQ(p.aligned[1], 0.75);
  EXPECT_DOUBLE_EQ(p.coverage, 1.0);
}

TEST(ProjectTest, IdentityEmptyAndUnaligned) {
  const std::vector<double> v = {0.1, 0.5, 0.2};
  const ProjectedScores same = project_scores(v, v, identity("x", "syn1", 3));
  EXPECT_EQ(same.aligned, v);
  EXPECT_DOUBLE_EQ(same.coverage, 1.0);

  const ProjectedScores none = project_scores(v, v, AlignmentSet{});
  EXPECT_TRUE(none.source.empty());
  EXPECT_TRUE(none.aligned.empty());
  EXPECT_DOUBLE_EQ(none.coverage, 0.0);

  AlignmentSet partial;
  partial.pairs = {{0, 2}, {2, 0}};
  const ProjectedScores p = project_scores(v, v, partial);
  EXPECT_EQ(p.source_positions, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(p.source, (std::vector<double>{0.1, 0.2}));
  EXPECT_EQ(p.aligned, (std::vector<double>{0.2, 0.1}));
  EXPECT_NEAR(p.coverage, 2.0 / 3.0, 1e-12);

  AlignmentSet bad;
  bad.pairs = {{0, 3}};
  EXPECT_THROW(project_scores(v, v, bad), DataError);
}

TEST(ProjectTest, LinearityAndPermutationEquivariance) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t ns = 2 + rng.below(6);
    const std::size_t nt = 2 + rng.below(6);
    const auto src = ::xattr::testing::random_vector(rng, ns);
    const auto tgt = ::xattr::testing::random_vector(rng, nt);
    AlignmentSet a;
    for (std::size_t k = 0; k < ns; ++k) {
      a.pairs.insert({k, rng.below(nt)});
      if (rng.uniform() < 0.3) a.pairs.insert({k, rng.below(nt)});
    }
    const ProjectedScores base = project_scores(src, tgt, a);

    const double alpha = 0.5 + rng.uniform();
    std::vector<double> s2 = src, t2 = tgt;
    for (double& x : s2) x *= alpha;
    for (double& x : t2) x *= alpha;
    const ProjectedScores scaled = project_scores(s2, t2, a);
    for (std::size_t i = 0; i < base.aligned.size(); ++i) {
      EXPECT_NEAR(scaled.aligned[i], alpha * base.aligned[i], 1e-12);
    }
    const auto r = spearman(base.source, base.aligned);
    const auto rs = spearman(scaled.source, scaled.aligned);
    ASSERT_EQ(r.has_value(), rs.has_value());
    if (r) EXPECT_NEAR(*r, *rs, 1e-12);

    std::vector<std::size_t> perm(nt);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm);
    std::vector<double> tp(nt);
    for (std::size_t j = 0; j < nt; ++j) tp[perm[j]] = tgt[j];
    AlignmentSet ap;
    for (const auto& l : a.pairs) ap.pairs.insert({l.source, perm[l.target]});
    const ProjectedScores permuted = project_scores(src, tp, ap);
    EXPECT_EQ(permuted.source_positions, base.source_positions);
    for (std::size_t i = 0; i < base.aligned.size(); ++i) {
      EXPECT_NEAR(permuted.aligned[i], base.aligned[i], 1e-12);
    }
  }
}

TEST(FaithfulnessTest, IdentityTranslationGivesOne) {
  const Bench b = noisy_bench(500, 50, {"syn1", "syn2"}, 0.0, 5);
  const EvalReport r =
      crosslingual_faithfulness(b.source, b.targets, b.alignments, {});
  EXPECT_NEAR(r.metrics.at("rho_overall"), 1.0, 1e-9);
  EXPECT_EQ(r.metrics.at("valid_instances"), 1000.0);
  EXPECT_EQ(r.metrics.at("skipped_count"), 0.0);
  EXPECT_DOUBLE_EQ(r.metrics.at("mean_coverage"), 1.0);
  EXPECT_NEAR(r.per_language.at("syn1"), 1.0, 1e-9);
}

TEST(FaithfulnessTest, IndependentScoresGiveNearZero) {
  const Bench b = noisy_bench(500, 50, {"syn1", "syn2", "syn3", "syn4"}, 1.0, 6);
  const EvalReport r =
      crosslingual_faithfulness(b.source, b.targets, b.alignments, {});
  EXPECT_LT(std::abs(r.metrics.at("rho_overall")), 0.1);
  EXPECT_EQ(r.metrics.at("languages_defined"), 4.0);
  for (const auto& [lang, v] : r.per_language) EXPECT_LT(std::abs(v), 0.1);
}

TEST(FaithfulnessTest, NoiseDoesNotRaiseCorrelation) {
  double previous = 2.0;
  for (double q : {0.0, 0.25, 0.5, 1.0}) {
    const double r = rho(noisy_bench(500, 20, {"syn1"}, q, 7));
    EXPECT_LE(r, previous + 0.02) << q;
    previous = r;
  }
}

TEST(FaithfulnessTest, OverallIsMeanOfLanguageMeans) {
  Bench b = noisy_bench(100, 10, {"syn1"}, 0.3, 8);
  const Bench c = noisy_bench(100, 10, {"syn1"}, 0.8, 9);
  // A second language, noisier, over the same source scores.
  for (const auto& [id, v] : b.source) {
    AttributionVector t = c.targets.at("syn1").at(id);
    t.language = "syn2";
    for (std::size_t k = 0; k < t.scores.size(); ++k) {
      if (k % 2 == 0) t.scores[k] = v.scores[k];
    }
    b.targets["syn2"][id] = t;
    b.alignments["syn2"][id] = identity(id, "syn2", 10);
  }
  const EvalReport r =
      crosslingual_faithfulness(b.source, b.targets, b.alignments, {});
  const double l1 = r.per_language.at("syn1");
  const double l2 = r.per_language.at("syn2");
  EXPECT_NE(l1, l2);
  EXPECT_NEAR(r.metrics.at("rho_overall"), (l1 + l2) / 2.0, 1e-12);
}

TEST(FaithfulnessTest, ConstantVectorsAreSkippedAndCounted) {
  Bench b = noisy_bench(10, 5, {"syn1"}, 0.0, 10);
  b.targets["syn1"]["i3"].scores.assign(5, 0.0);
  b.source["i4"].scores.assign(5, 1.0);
  b.targets["syn1"]["i4"].scores.assign(5, 1.0);
  XfaithOptions options;
  options.include_per_instance = true;
  const EvalReport r =
      crosslingual_faithfulness(b.source, b.targets, b.alignments, options);
  EXPECT_EQ(r.metrics.at("skipped_count"), 2.0);
  EXPECT_EQ(r.metrics.at("valid_instances"), 8.0);
  EXPECT_NEAR(r.metrics.at("rho_overall"), 1.0, 1e-12);
}

TEST(FaithfulnessTest, LanguageWithoutValidInstanceIsExcluded) {
  Bench b = noisy_bench(10, 5, {"syn1", "syn2"}, 0.0, 11);
  for (auto& [id, v] : b.targets["syn2"]) v.scores.assign(5, 0.0);
  const EvalReport r =
      crosslingual_faithfulness(b.source, b.targets, b.alignments, {});
  EXPECT_EQ(r.metrics.at("languages_defined"), 1.0);
  EXPECT_NEAR(r.metrics.at("rho_overall"), 1.0, 1e-12);
  EXPECT_FALSE(r.per_language.count("syn2"));
  EXPECT_FALSE(r.notes.empty());
}

TEST(FaithfulnessTest, ThreadCountDoesNotChangeResult) {
  const Bench b = noisy_bench(300, 12, {"syn1", "syn2"}, 0.5, 12);
  XfaithOptions one;
  one.threads = 1;
  XfaithOptions many;
  many.threads = 4;
  EXPECT_EQ(crosslingual_faithfulness(b.source, b.targets, b.alignments, one),
            crosslingual_faithfulness(b.source, b.targets, b.alignments, many));
}

TEST(RandomAlignmentTest, Properties) {
  EXPECT_EQ(random_alignments(1, 1, 3).pairs,
            (std::set<AlignmentLink>{{0, 0}}));
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const std::size_t ns = 1 + seed % 9;
    const std::size_t nt = 1 + (seed * 7) % 11;
    const AlignmentSet a = random_alignments(ns, nt, seed);
    EXPECT_EQ(a, random_alignments(ns, nt, seed));
    EXPECT_NO_THROW(a.check_bounds(ns, nt));
    EXPECT_FALSE(a.pairs.empty());
    std::vector<int> per_source(ns, 0), per_target(nt, 0);
    for (const auto& l : a.pairs) {
      ++per_source[l.source];
      ++per_target[l.target];
    }
    for (int c : per_source) EXPECT_LE(c, 2);
    for (int c : per_target) EXPECT_LE(c, 2);
    // The first round alone links min(ns, nt) words at most.
    EXPECT_LE(a.pairs.size(), 2 * std::min(ns, nt));
  }
}

TEST(RandomAlignmentTest, DestroysCorrelationOnTrainedModel) {
  const auto& fx = ::xattr::testing::trained_fixture();
  attribution::AttributionConfig config;
  config.method = Method::kOcclusion;
  config.aggregation = Aggregation::kNone;
  const auto src_pairs = fx.test_pairs(0);
  Bench gold;
  Bench random;
  const auto src = attribution::attribute_all(fx.params, src_pairs, config);
  for (const auto& v : src) {
    gold.source[v.instance_id] = v;
    random.source[v.instance_id] = v;
  }
  for (std::size_t l = 1; l < fx.corpus.languages.size(); ++l) {
    const auto& lang = fx.corpus.languages[l];
    const auto tgt = attribution::attribute_all(fx.params, fx.test_pairs(l), config);
    for (std::size_t i = 0; i < tgt.size(); ++i) {
      const auto& id = tgt[i].instance_id;
      gold.targets[lang][id] = tgt[i];
      random.targets[lang][id] = tgt[i];
      gold.alignments[lang][id] =
          fx.corpus.alignments[l][fx.corpus.train_count + i];
      random.alignments[lang][id] = random_alignments(
          src[i].scores.size(), tgt[i].scores.size(), stable_hash(lang + id));
    }
  }
  const double rho_gold = rho(gold);
  const double rho_random = rho(random);
  EXPECT_GT(rho_gold - rho_random, 0.2);
  EXPECT_LT(std::abs(rho_random), 0.1);
}

}  // namespace
}  // namespace xattr::xfaith
