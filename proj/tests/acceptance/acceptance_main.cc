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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "test_util.h"
#include "xattr/attribution/attribution.h"
#include "xattr/cka/cka.h"
#include "xattr/cli/cli.h"
#include "xattr/core/io.h"
#include "xattr/erasure/erasure.h"
#include "xattr/plausibility/plausibility.h"
#include "xattr/xfaith/xfaith.h"

namespace xattr::acceptance {
namespace {

namespace fs = std::filesystem;
using namespace ::xattr::testing;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

AttributionVector vec(const std::string& id, const std::string& lang,
                      std::vector<double> scores) {
  AttributionVector v;
  v.instance_id = id;
  v.language = lang;
  v.scores = std::move(scores);
  return v;
}

struct LinearCase {
  model::EmbeddedInput input;
  std::vector<double> baseline;
  LinearObjective f;
};

LinearCase linear_case(std::uint64_t seed) {
  Rng rng(seed);
  model::EmbeddedInput input = random_input(rng, 3, 2, 4);
  std::vector<double> baseline = random_vector(rng, 4, 0.5);
  std::vector<std::vector<double>> w;
  for (int j = 0; j < 5; ++j) w.push_back(random_vector(rng, 4));
  return {input, baseline, LinearObjective(w, rng.normal())};
}

// --- CLI workspace shared by the pipeline criteria --------------------------

int cli(std::vector<std::string> args, std::string* out = nullptr) {
  args.insert(args.begin(), "xattr");
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  if (out) *out = o.str();
  if (code != 0) std::fprintf(stderr, "%s", e.str().c_str());
  return code;
}

const fs::path& workspace() {
  static const fs::path dir = [] {
    const fs::path d = temp_dir("acceptance");
    if (cli({"gen-corpus", "--seed", "7", "--n", "1000", "--languages", "3",
             "-o", (d / "data").string()}) != 0 ||
        cli({"train", "--seed", "7", "--data", (d / "data").string(), "-o",
             (d / "model.json").string()}) != 0) {
      throw std::runtime_error("could not build the benchmark workspace");
    }
    return d;
  }();
  return dir;
}

// --- criteria ---------------------------------------------------------------

Outcome gradient_correctness() {
  std::size_t checked = 0;
  std::size_t bad = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto c = random_model_case(50000 + seed);
    const model::ForwardTrace trace = model::forward(c.params, c.pair);
    for (OutputMechanism m :
         {OutputMechanism::kTopPrediction, OutputMechanism::kLoss}) {
      const auto target = model::resolve_target(trace, m, c.pair.label);
      const auto g = model::gradient_at(c.params, trace.input, target,
                                        model::GradientMode::kPlain);
      const auto fd = finite_difference_gradient(c.params, trace.input, target);
      for (std::size_t j = 0; j < g.size(); ++j) {
        for (std::size_t k = 0; k < g[j].size(); ++k) {
          ++checked;
          if (!agrees(g[j][k], fd[j][k], 1e-4, 1e-7)) ++bad;
          worst = std::max(worst, std::abs(g[j][k] - fd[j][k]));
        }
      }
    }
  }
  return {bad == 0, std::to_string(checked) + " entries over 100 draws, " +
                        std::to_string(bad) + " outside tolerance, worst " +
                        fmt("absolute difference %.2e", worst)};
}

double ig_error(const model::ModelParams& params,
                std::span<const TokenizedPair> pairs, int steps) {
  std::vector<double> errors;
  for (const auto& pair : pairs) {
    const auto trace = model::forward(params, pair);
    const attribution::ModelObjective f(
        params, model::resolve_target(trace, OutputMechanism::kTopPrediction,
                                      std::nullopt));
    const auto base = params.pad_embedding();
    double sum = 0.0;
    for (const auto& row : attribution::integrated_gradients_per_dim(
             f, trace.input, base, steps)) {
      sum += std::accumulate(row.begin(), row.end(), 0.0);
    }
    const double want =
        f.value(trace.input) -
        f.value(attribution::with_baseline(
            trace.input, base, std::vector<bool>(trace.input.num_words(), true)));
    errors.push_back(std::abs(sum - want) / std::max(std::abs(want), 1e-12));
  }
  return pairwise_mean(errors);
}

Outcome ig_completeness() {
  const auto& fx = trained_fixture();
  const auto all = fx.test_pairs(0);
  const std::span<const TokenizedPair> pairs(all.data(), 50);
  const double e50 = ig_error(fx.params, pairs, 50);
  const double e100 = ig_error(fx.params, pairs, 100);
  return {e50 < 5e-2 && e100 < e50,
          fmt("mean relative error %.4g at m=50, %.4g at m=100 (50 instances)",
              e50, e100)};
}

Outcome shapley_exactness() {
  const auto& fx = trained_fixture();
  double worst_efficiency = 0.0;
  for (std::size_t l = 0; l < fx.corpus.languages.size(); ++l) {
    const auto pairs = fx.test_pairs(l);
    for (std::size_t i = 0; i < 100; ++i) {
      attribution::AttributionConfig c;
      c.method = Method::kShapleySampling;
      c.aggregation = Aggregation::kNone;
      c.seed = 7;
      const auto v = attribution::shapley_sampling(fx.params, pairs[i], c);
      const auto trace = model::forward(fx.params, pairs[i]);
      const attribution::ModelObjective f(
          fx.params, model::resolve_target(trace, c.output, std::nullopt));
      const auto pad = attribution::with_baseline(
          trace.input, fx.params.pad_embedding(),
          std::vector<bool>(trace.input.num_words(), true));
      const double total = std::accumulate(v.scores.begin(), v.scores.end(), 0.0);
      worst_efficiency = std::max(
          worst_efficiency, std::abs(total - (f.value(trace.input) - f.value(pad))));
    }
  }
  double worst_brute = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto mc = random_model_case(seed);
    mc.pair.premise = {"w1", "w2"};
    mc.pair.hypothesis = {"w" + std::to_string(3 + seed % 9)};
    const auto input = model::embed(mc.params, mc.pair);
    const attribution::ModelObjective f(
        mc.params, model::resolve_target(model::forward(mc.params, input),
                                         OutputMechanism::kTopPrediction,
                                         std::nullopt));
    const auto base = mc.params.pad_embedding();
    const auto sampled = attribution::shapley_over_permutations(
        f, input, base, all_permutations(3));
    const auto exact = brute_force_shapley(f, input, base);
    for (std::size_t j = 0; j < 3; ++j) {
      worst_brute = std::max(worst_brute, std::abs(sampled[j] - exact[j]));
    }
  }
  return {worst_efficiency <= 1e-9 && worst_brute <= 1e-9,
          fmt("max efficiency gap %.2e over 300 instances; max 3-word "
              "brute-force gap %.2e over 50 draws",
              worst_efficiency, worst_brute)};
}

Outcome additive_oracles() {
  double occ = 0.0, shap = 0.0, ig = 0.0, lime = 0.0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto c = linear_case(seed);
    const auto o = attribution::occlusion_scores(c.f, c.input, c.baseline);
    const auto s = attribution::shapley_over_permutations(
        c.f, c.input, c.baseline, all_permutations(5));
    const auto g =
        attribution::integrated_gradients_per_dim(c.f, c.input, c.baseline, 50);
    attribution::LimeOptions lo;
    lo.samples = 200;
    const auto l = attribution::lime_scores(c.f, c.input, c.baseline, lo, seed);
    for (std::size_t j = 0; j < 5; ++j) {
      const double want = c.f.contribution(c.input, j, c.baseline);
      occ = std::max(occ, std::abs(o[j] - want));
      shap = std::max(shap, std::abs(s[j] - want));
      ig = std::max(ig, std::abs(std::accumulate(g[j].begin(), g[j].end(), 0.0) -
                                 want));
      lime = std::max(lime, std::abs(l[j] - want) / std::abs(want));
    }
  }
  return {occ <= 1e-9 && shap <= 1e-9 && ig <= 1e-6 && lime <= 0.1,
          fmt("occlusion %.1e, exact Shapley %.1e, IG word sums %.1e; ", occ,
              shap, ig) +
              fmt("LIME worst relative error %.3f at 200 samples", lime)};
}

Outcome guided_saliency_identity() {
  std::size_t compared = 0;
  bool equal = true;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto mc = random_model_case(seed, model::HiddenActivation::kIdentity,
                                      {8, 12});
    for (OutputMechanism o :
         {OutputMechanism::kTopPrediction, OutputMechanism::kLoss}) {
      attribution::AttributionConfig c;
      c.output = o;
      c.aggregation = Aggregation::kL2;
      c.method = Method::kGuidedBackprop;
      const auto gbp = attribution::attribute(mc.params, mc.pair, c).scores;
      c.method = Method::kSaliency;
      const auto sal = attribution::attribute(mc.params, mc.pair, c).scores;
      equal = equal && gbp == sal;
      ++compared;
    }
  }
  return {equal, std::to_string(compared) +
                     " instance/output pairs on a ReLU-free model, bitwise equal"};
}

Outcome crosslingual_sanity() {
  Rng rng(11);
  std::map<std::string, AttributionVector> source;
  xfaith::ScoresByLanguage same, independent;
  xfaith::AlignmentsByLanguage align;
  for (int i = 0; i < 500; ++i) {
    const std::string id = "i" + std::to_string(i);
    const auto s = random_vector(rng, 50);
    source[id] = vec(id, "syn0", s);
    for (const char* lang : {"syn1", "syn2"}) {
      same[lang][id] = vec(id, lang, s);
      independent[lang][id] = vec(id, lang, random_vector(rng, 50));
      AlignmentSet a;
      a.instance_id = id;
      for (std::size_t k = 0; k < 50; ++k) a.pairs.insert({k, k});
      align[lang][id] = a;
    }
  }
  const double one =
      xfaith::crosslingual_faithfulness(source, same, align, {}).metrics.at(
          "rho_overall");
  const double zero =
      xfaith::crosslingual_faithfulness(source, independent, align, {})
          .metrics.at("rho_overall");
  return {std::abs(one - 1.0) <= 1e-9 && std::abs(zero) < 0.1,
          fmt("identity rho = %.12f, independent rho = %.4f (500 x 50)", one,
              zero)};
}

Outcome random_alignment_ablation() {
  const fs::path& d = workspace();
  const std::vector<std::string> base = {
      "eval-xfaith", "--seed", "7", "--model", (d / "model.json").string(),
      "--data", (d / "data").string(), "--method", "occlusion"};
  std::string gold_out, random_out;
  std::vector<std::string> gold_args = base;
  std::vector<std::string> random_args = base;
  random_args.insert(random_args.end(), {"--alignments", "random"});
  if (cli(gold_args, &gold_out) != 0 || cli(random_args, &random_out) != 0) {
    return {false, "eval-xfaith failed"};
  }
  const double gold =
      nlohmann::json::parse(gold_out).at("metrics").at("rho_overall");
  const double random =
      nlohmann::json::parse(random_out).at("metrics").at("rho_overall");
  return {gold - random > 0.2 && std::abs(random) < 0.1,
          fmt("Occlusion rho gold %.4f, random %.4f, gap %.4f", gold, random,
              gold - random)};
}

Outcome erasure_identities() {
  const auto& fx = trained_fixture();
  const erasure::ModelClassifier m(fx.params);
  const auto pairs = fx.test_pairs(0);
  bool exact = true;
  for (std::size_t i = 0; i < 200; ++i) {
    std::vector<std::size_t> all(pairs[i].num_words());
    std::iota(all.begin(), all.end(), std::size_t{0});
    exact = exact && erasure::comprehensiveness(m, pairs[i], {}) == 0.0 &&
            erasure::sufficiency(m, pairs[i], all) == 0.0;
  }

  // Additive classifier: p(class 0) = 0.35 + sum of word contributions.
  class Additive : public erasure::SequenceClassifier {
   public:
    explicit Additive(std::map<std::string, double> c) : c_(std::move(c)) {}
    erasure::Probabilities probabilities(const TokenizedPair& p) const override {
      double v = 0.35;
      for (const auto* seg : {&p.premise, &p.hypothesis}) {
        for (const auto& w : *seg) {
          const auto it = c_.find(w);
          if (it != c_.end()) v += it->second;
        }
      }
      return {v, (1 - v) / 2, (1 - v) / 2};
    }
    std::map<std::string, double> c_;
  };
  Rng rng(12);
  std::map<std::string, double> contrib;
  std::vector<std::string> vocab;
  for (int w = 0; w < 30; ++w) {
    vocab.push_back("v" + std::to_string(w));
    contrib[vocab.back()] = 0.05 * rng.uniform();
  }
  const Additive add(contrib);
  std::vector<double> truth_aopc, perm_aopc;
  for (int i = 0; i < 200; ++i) {
    TokenizedPair p;
    p.id = std::to_string(i);
    for (std::size_t k = 0, n = 2 + rng.below(5); k < n; ++k) {
      p.premise.push_back(vocab[rng.below(30)]);
    }
    for (std::size_t k = 0, n = 1 + rng.below(4); k < n; ++k) {
      p.hypothesis.push_back(vocab[rng.below(30)]);
    }
    std::vector<double> truth;
    for (std::size_t j = 0; j < p.num_words(); ++j) {
      truth.push_back(contrib.at(p.word(j)));
    }
    truth_aopc.push_back(
        erasure::aopc(add, p, truth, {}, erasure::ErasureKind::kComprehensiveness));
    for (int q = 0; q < 20; ++q) {
      std::vector<double> s = truth;
      rng.shuffle(s);
      perm_aopc.push_back(
          erasure::aopc(add, p, s, {}, erasure::ErasureKind::kComprehensiveness));
    }
  }
  const double t = pairwise_mean(truth_aopc);
  const double pm = pairwise_mean(perm_aopc);
  return {exact && t >= pm,
          std::string(exact ? "identities exact on 200 instances; "
                            : "identity violated; ") +
              fmt("AOPC true %.4f vs permuted %.4f", t, pm)};
}

Outcome map_properties() {
  const auto ap = plausibility::average_precision(
      std::vector<double>{0.9, 0.8, 0.1}, {false, true, true});
  const bool example = ap && *ap == 7.0 / 12.0;
  Rng rng(13);
  std::map<std::string, AttributionVector> perfect, random;
  std::map<std::string, HighlightMask> golds;
  std::size_t positives = 0, words = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::string id = std::to_string(i);
    const std::size_t n = 100;
    std::vector<bool> g(n);
    std::vector<double> p(n), r(n);
    for (std::size_t k = 0; k < n; ++k) g[k] = rng.bernoulli(0.3);
    g[rng.below(n)] = true;
    for (std::size_t k = 0; k < n; ++k) {
      p[k] = g[k] ? 1.0 + rng.uniform() : rng.uniform();
      r[k] = rng.uniform();
    }
    positives += std::size_t(std::count(g.begin(), g.end(), true));
    words += n;
    perfect[id] = vec(id, "syn0", p);
    random[id] = vec(id, "syn0", r);
    golds[id] = HighlightMask{id, "syn0", g};
  }
  const double density = double(positives) / double(words);
  const double map_perfect =
      plausibility::map_score(perfect, golds).metrics.at("map");
  const double map_random =
      plausibility::map_score(random, golds).metrics.at("map");
  return {example && map_perfect == 1.0 && std::abs(map_random - density) <= 0.05,
          fmt("AP example %.17g (7/12 = %.17g); perfect MAP %.3f; ",
              ap ? *ap : -1.0, 7.0 / 12.0, map_perfect) +
              fmt("random MAP %.4f vs density %.4f", map_random, density)};
}

Outcome pipeline_determinism() {
  const fs::path& d = workspace();
  auto sweep = [&](const std::string& name) {
    const fs::path out = d / name;
    if (cli({"sweep", "--seed", "7", "--model", (d / "model.json").string(),
             "--data", (d / "data").string(), "-o", out.string()}) != 0) {
      throw std::runtime_error("sweep failed");
    }
    return read_file(out / "sweep.csv");
  };
  const std::string a = sweep("sweep_a");
  const std::string b = sweep("sweep_b");
  ::setenv("XATTR_THREADS", "1", 1);
  const std::string serial = sweep("sweep_serial");
  ::setenv("XATTR_THREADS", "4", 1);
  const std::string parallel = sweep("sweep_parallel");
  ::unsetenv("XATTR_THREADS");
  const bool ok = a == b && serial == parallel && a == serial;
  return {ok, std::string("repeat ") + (a == b ? "identical" : "differs") +
                  ", 1 vs 4 threads " +
                  (serial == parallel ? "identical" : "differs") + " (" +
                  std::to_string(a.size()) + " bytes)"};
}

Outcome cka_suite() {
  Rng rng(14);
  auto batch = [&](std::size_t n, std::size_t p) {
    cka::RepresentationBatch b;
    b.dims = p;
    for (std::size_t i = 0; i < n; ++i) b.ids.push_back(std::to_string(i));
    for (std::size_t i = 0; i < n * p; ++i) b.values.push_back(rng.normal());
    return b;
  };
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = batch(12, 5);
    const auto y = batch(12, 5);
    const double base = *cka::linear_cka(x, y);
    worst = std::max(worst, std::abs(*cka::linear_cka(y, x) - base));
    // Orthogonal transform by Householder reflection.
    std::vector<double> v = random_vector(rng, 5);
    const double vv = std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
    cka::RepresentationBatch qx = x;
    for (std::size_t i = 0; i < 12; ++i) {
      const auto row = x.row(i);
      const double dot = std::inner_product(row.begin(), row.end(), v.begin(), 0.0);
      for (std::size_t k = 0; k < 5; ++k) {
        qx.values[i * 5 + k] = row[k] - 2.0 * dot / vv * v[k];
      }
    }
    worst = std::max(worst, std::abs(*cka::linear_cka(qx, y) - base));
    cka::RepresentationBatch sx = x;
    for (double& e : sx.values) e *= 3.0;
    worst = std::max(worst, std::abs(*cka::linear_cka(sx, y) - base));
  }
  const auto x = batch(400, 6);
  const double copy = cka::batch_matching_accuracy(x, x, {8, 10, 7, 0}).accuracy;
  const auto s = batch(1600, 6);
  const auto t = batch(1600, 6);
  const double chance =
      cka::batch_matching_accuracy(s, t, {8, 10, 7, 0}).accuracy;
  return {worst <= 1e-9 && copy == 1.0 && std::abs(chance - 1.0 / 11.0) <= 0.1,
          fmt("invariance max deviation %.1e; copied accuracy %.3f; ", worst,
              copy) +
              fmt("independent accuracy %.3f vs 1/11 = %.3f (200 batches)",
                  chance, 1.0 / 11.0)};
}

Outcome exnli_builder() {
  const auto& fx = trained_fixture();
  attribution::AttributionConfig c;
  c.method = Method::kOcclusion;
  c.aggregation = Aggregation::kNone;
  plausibility::ExnliInputs in;
  in.source_language = "syn0";
  in.source = fx.test_entries(0);
  const auto scores = attribution::attribute_all(fx.params, fx.test_pairs(0), c);
  for (const auto& v : scores) in.source_scores[v.instance_id] = v;
  for (std::size_t l = 1; l < fx.corpus.languages.size(); ++l) {
    const auto& lang = fx.corpus.languages[l];
    in.targets[lang] = fx.test_entries(l);
    for (std::size_t i = fx.corpus.train_count; i < fx.corpus.entries[l].size();
         ++i) {
      in.alignments[lang][fx.corpus.entries[l][i].pair.id] =
          fx.corpus.alignments[l][i];
    }
  }
  in.threshold = 0.5;
  const auto result = plausibility::build_exnli(in);
  std::size_t exact = 0, agree = 0, checked = 0;
  for (std::size_t i = 0; i < in.source.size(); ++i) {
    if (plausibility::binarize(scores[i].scores, in.threshold) !=
        in.source[i].highlight->mask) {
      continue;
    }
    ++exact;
    for (std::size_t l = 1; l < fx.corpus.languages.size(); ++l) {
      ++checked;
      if (result.datasets.at(fx.corpus.languages[l])[i].highlight->mask ==
          fx.test_entries(l)[i].highlight->mask) {
        ++agree;
      }
    }
  }
  const plausibility::Prf prf =
      plausibility::highlight_prf({true, true, false}, {false, true, true});
  const bool prf_ok = prf.precision == 0.5 && prf.recall == 0.5 && prf.f1 == 0.5;
  return {exact > 0 && agree == checked && prf_ok,
          std::to_string(agree) + "/" + std::to_string(checked) +
              " projected masks equal gold over " + std::to_string(exact) +
              " exactly binarized sources; P/R/F1 = " +
              fmt("(%.2f, %.2f, %.2f)", prf.precision, prf.recall, prf.f1)};
}

}  // namespace
}  // namespace xattr::acceptance

int main() {
  using namespace xattr::acceptance;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient-correctness", gradient_correctness},
      {"ig-completeness", ig_completeness},
      {"shapley-exactness", shapley_exactness},
      {"additive-oracles", additive_oracles},
      {"guided-saliency-identity", guided_saliency_identity},
      {"crosslingual-sanity", crosslingual_sanity},
      {"random-alignment-ablation", random_alignment_ablation},
      {"erasure-identities", erasure_identities},
      {"map-properties", map_properties},
      {"pipeline-determinism", pipeline_determinism},
      {"cka-suite", cka_suite},
      {"exnli-builder", exnli_builder},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    std::printf("%s %-26s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
