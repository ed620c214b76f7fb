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
#include <map>
#include <numeric>

#include <gtest/gtest.h>

#include "test_util.h"
#include "xattr/attribution/attribution.h"
#include "xattr/core/io.h"
#include "xattr/erasure/erasure.h"

namespace xattr::erasure {
namespace {

using ::xattr::testing::trained_fixture;

// p(class 0) = 0.35 + sum of per-word contributions; the remainder is split
// evenly between the other classes. [PAD] contributes nothing.
class AdditiveClassifier : public SequenceClassifier {
 public:
  explicit AdditiveClassifier(std::map<std::string, double> c)
      : c_(std::move(c)) {}
  Probabilities probabilities(const TokenizedPair& pair) const override {
    double p = 0.35;
    for (const auto* seg : {&pair.premise, &pair.hypothesis}) {
      for (const auto& w : *seg) {
        auto it = c_.find(w);
        if (it != c_.end()) p += it->second;
      }
    }
    return {p, (1.0 - p) / 2.0, (1.0 - p) / 2.0};
  }
  double contribution(const std::string& w) const { return c_.at(w); }

 private:
  std::map<std::string, double> c_;
};

class ConstantClassifier : public SequenceClassifier {
 public:
  Probabilities probabilities(const TokenizedPair&) const override {
    return {0.2, 0.5, 0.3};
  }
};

TokenizedPair make_pair(std::vector<std::string> premise,
                        std::vector<std::string> hypothesis) {
  TokenizedPair p;
  p.id = "e";
  p.language = "syn0";
  p.premise = std::move(premise);
  p.hypothesis = std::move(hypothesis);
  return p;
}

TEST(TopKTest, HandExamples) {
  const std::vector<double> s = {0.9, 0.1, 0.5};
  EXPECT_EQ(top_k_tokens(s, 0.34), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(top_k_tokens(s, 1.0), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(top_k_tokens(s, 0.01), (std::vector<std::size_t>{0}));
  const std::vector<double> equal = {1, 1, 1, 1};
  EXPECT_EQ(top_k_tokens(equal, 0.5), (std::vector<std::size_t>{0, 1}));
  EXPECT_THROW(top_k_tokens(std::vector<double>{}, 0.5), std::invalid_argument);
  EXPECT_THROW(top_k_tokens(s, 0.0), std::invalid_argument);
  EXPECT_THROW(top_k_tokens(s, 1.5), std::invalid_argument);
}

TEST(TopKTest, SizeIsCeilingAndSelectionIsMaximal) {
  Rng rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.below(20);
    std::vector<double> s(n);
    for (double& x : s) x = double(rng.below(4));
    const double f = 0.01 + 0.99 * rng.uniform();
    const auto r = top_k_tokens(s, f);
    const std::size_t k = std::max<std::size_t>(
        1, std::size_t(std::ceil(f * double(n) - 1e-9)));
    ASSERT_EQ(r.size(), k);
    EXPECT_TRUE(std::is_sorted(r.begin(), r.end()));
    std::vector<bool> in(n, false);
    for (auto i : r) in[i] = true;
    // No excluded word outranks an included one under (score desc, index asc).
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (in[a] && !in[b]) {
          EXPECT_TRUE(s[a] > s[b] || (s[a] == s[b] && a < b));
        }
      }
    }
  }
}

TEST(EraseTest, DeletesAndKeepsWithPadGuard) {
  const TokenizedPair p = make_pair({"a", "b"}, {"c", "d"});
  const std::vector<std::size_t> r = {1, 2};
  const TokenizedPair removed = erase(p, r, false);
  EXPECT_EQ(removed.premise, std::vector<std::string>{"a"});
  EXPECT_EQ(removed.hypothesis, std::vector<std::string>{"d"});
  const TokenizedPair kept = erase(p, r, true);
  EXPECT_EQ(kept.premise, std::vector<std::string>{"b"});
  EXPECT_EQ(kept.hypothesis, std::vector<std::string>{"c"});
  const std::vector<std::size_t> premise_only = {0, 1};
  const TokenizedPair emptied = erase(p, premise_only, false);
  EXPECT_EQ(emptied.premise, std::vector<std::string>{"[PAD]"});
  EXPECT_EQ(emptied.hypothesis, p.hypothesis);
  const TokenizedPair none = erase(p, {}, true);
  EXPECT_EQ(none.premise, std::vector<std::string>{"[PAD]"});
  EXPECT_EQ(none.hypothesis, std::vector<std::string>{"[PAD]"});
}

TEST(ConfigTest, BinsMustIncreaseWithinUnitInterval) {
  EXPECT_NO_THROW(ErasureConfig{}.validate());
  EXPECT_THROW((ErasureConfig{{0.2, 0.1}}).validate(), std::invalid_argument);
  EXPECT_THROW((ErasureConfig{{0.0, 0.1}}).validate(), std::invalid_argument);
  EXPECT_THROW((ErasureConfig{{0.5, 1.1}}).validate(), std::invalid_argument);
  EXPECT_THROW((ErasureConfig{{}}).validate(), std::invalid_argument);
  EXPECT_THROW((ErasureConfig{{0.1, 0.1}}).validate(), std::invalid_argument);
}

TEST(IdentityTest, EmptyRemovalAndFullKeepAreExactlyZero) {
  const auto& fx = trained_fixture();
  const ModelClassifier m(fx.params);
  const auto pairs = fx.test_pairs(0);
  ASSERT_GE(pairs.size(), 200u);
  for (std::size_t i = 0; i < 200; ++i) {
    std::vector<std::size_t> all(pairs[i].num_words());
    std::iota(all.begin(), all.end(), std::size_t{0});
    EXPECT_EQ(comprehensiveness(m, pairs[i], {}), 0.0);
    EXPECT_EQ(sufficiency(m, pairs[i], all), 0.0);
  }
}

TEST(IdentityTest, ConstantModelGivesZero) {
  const ConstantClassifier c;
  const TokenizedPair p = make_pair({"a", "b"}, {"c"});
  const std::vector<std::size_t> r = {0, 2};
  EXPECT_EQ(comprehensiveness(c, p, r), 0.0);
  EXPECT_EQ(sufficiency(c, p, r), 0.0);
  const std::vector<double> s = {0.1, 0.2, 0.3};
  EXPECT_EQ(aopc(c, p, s, {}, ErasureKind::kComprehensiveness), 0.0);
  EXPECT_EQ(aopc(c, p, s, {}, ErasureKind::kSufficiency), 0.0);
}

TEST(OracleTest, MatchesDirectForwardPasses) {
  const auto& fx = trained_fixture();
  const ModelClassifier m(fx.params);
  const auto pairs = fx.test_pairs(1);
  const TokenizedPair pad =
      make_pair({std::string(model::kPadToken)}, {std::string(model::kPadToken)});
  for (std::size_t i = 0; i < 30; ++i) {
    const auto& p = pairs[i];
    const model::ForwardTrace t = model::forward(fx.params, p);
    const int j = t.predicted;
    const double full = t.probabilities[j];
    EXPECT_NEAR(sufficiency(m, p, {}),
                full - model::forward(fx.params, pad).probabilities[j], 1e-15);
    // Removing word 0 only.
    TokenizedPair minus = p;
    minus.premise.erase(minus.premise.begin());
    if (minus.premise.empty()) minus.premise = {std::string(model::kPadToken)};
    const std::vector<std::size_t> first = {0};
    EXPECT_NEAR(comprehensiveness(m, p, first),
                full - model::forward(fx.params, minus).probabilities[j], 1e-15);
    // A single bin at 1.0 removes every word.
    const std::vector<double> s(p.num_words(), 1.0);
    EXPECT_NEAR(aopc(m, p, s, ErasureConfig{{1.0}}, ErasureKind::kComprehensiveness),
                full - model::forward(fx.params, pad).probabilities[j], 1e-15);
  }
}

TEST(OracleTest, AdditiveContributionsBeatPermutedScores) {
  Rng rng(3);
  std::map<std::string, double> c;
  std::vector<std::string> vocab;
  for (int w = 0; w < 30; ++w) {
    vocab.push_back("v" + std::to_string(w));
    c[vocab.back()] = 0.05 * rng.uniform();
  }
  const AdditiveClassifier m(c);
  const ErasureConfig config;
  double exact_total = 0.0;
  double permuted_total = 0.0;
  std::size_t permuted_count = 0;
  for (int i = 0; i < 200; ++i) {
    TokenizedPair p;
    p.id = "a" + std::to_string(i);
    for (std::size_t k = 0, n = 2 + rng.below(5); k < n; ++k) {
      p.premise.push_back(vocab[rng.below(30)]);
    }
    for (std::size_t k = 0, n = 1 + rng.below(4); k < n; ++k) {
      p.hypothesis.push_back(vocab[rng.below(30)]);
    }
    std::vector<double> truth;
    for (std::size_t j = 0; j < p.num_words(); ++j) {
      truth.push_back(m.contribution(p.word(j)));
    }
    const double exact = aopc(m, p, truth, config, ErasureKind::kComprehensiveness);
    exact_total += exact;
    for (int q = 0; q < 20; ++q) {
      std::vector<double> perm = truth;
      rng.shuffle(perm);
      const double v = aopc(m, p, perm, config, ErasureKind::kComprehensiveness);
      EXPECT_LE(v, exact + 1e-12);
      permuted_total += v;
      ++permuted_count;
    }
  }
  EXPECT_GE(exact_total / 200.0, permuted_total / double(permuted_count));
}

TEST(ReportTest, OcclusionBeatsRandomScoresOnTrainedModel) {
  const auto& fx = trained_fixture();
  const ModelClassifier m(fx.params);
  const auto pairs = fx.test_pairs(0);
  attribution::AttributionConfig ac;
  ac.method = Method::kOcclusion;
  ac.aggregation = Aggregation::kNone;
  const auto occ = attribution::attribute_all(fx.params, pairs, ac);
  std::vector<AttributionVector> random = occ;
  Rng rng(4);
  for (auto& v : random) {
    for (double& s : v.scores) s = rng.uniform();
  }
  const EvalReport a = erasure_report(m, pairs, occ, {});
  const EvalReport b = erasure_report(m, pairs, random, {});
  EXPECT_GT(a.metrics.at("aopc_comprehensiveness"),
            b.metrics.at("aopc_comprehensiveness"));
  EXPECT_LT(a.metrics.at("aopc_sufficiency"), b.metrics.at("aopc_sufficiency"));
}

TEST(ReportTest, KeysBoundsAndBinMeans) {
  const auto& fx = trained_fixture();
  const ModelClassifier m(fx.params);
  const auto all = fx.test_pairs(2);
  const std::vector<TokenizedPair> pairs(all.begin(), all.begin() + 40);
  attribution::AttributionConfig ac;
  ac.method = Method::kSaliency;
  const auto attrs = attribution::attribute_all(fx.params, pairs, ac);
  const ErasureConfig config;
  const EvalReport r = erasure_report(m, pairs, attrs, config);
  for (const char* key :
       {"aopc_comprehensiveness", "aopc_sufficiency", "comprehensiveness@0.01",
        "comprehensiveness@0.5", "sufficiency@0.2"}) {
    ASSERT_TRUE(r.metrics.count(key)) << key;
    EXPECT_GT(r.metrics.at(key), -1.0);
    EXPECT_LT(r.metrics.at(key), 1.0);
  }
  double bin_mean = 0.0;
  for (double f : config.bin_fractions) {
    bin_mean += r.metrics.at("comprehensiveness@" + format_double(f));
  }
  EXPECT_NEAR(bin_mean / 5.0, r.metrics.at("aopc_comprehensiveness"), 1e-12);

  double direct = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    direct += aopc(m, pairs[i], attrs[i].scores, config,
                   ErasureKind::kSufficiency);
  }
  EXPECT_NEAR(direct / double(pairs.size()), r.metrics.at("aopc_sufficiency"),
              1e-12);
}

TEST(ReportTest, MismatchedAttributionsAreRejected) {
  const auto& fx = trained_fixture();
  const ModelClassifier m(fx.params);
  const auto pairs = fx.test_pairs(0);
  attribution::AttributionConfig ac;
  const std::vector<TokenizedPair> two(pairs.begin(), pairs.begin() + 2);
  auto attrs = attribution::attribute_all(fx.params, two, ac);
  std::swap(attrs[0], attrs[1]);
  EXPECT_THROW(erasure_report(m, two, attrs, {}), DataError);
  attrs.pop_back();
  EXPECT_THROW(erasure_report(m, two, attrs, {}), DataError);
}

}  // namespace
}  // namespace xattr::erasure
