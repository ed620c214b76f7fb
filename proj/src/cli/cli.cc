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

#include "xattr/cli/cli.h"

#include <CLI11.hpp>
#include <charconv>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "xattr/attribution/attribution.h"
#include "xattr/cka/cka.h"
#include "xattr/cli/chart.h"
#include "xattr/core/io.h"
#include "xattr/core/types.h"
#include "xattr/core/util.h"
#include "xattr/corpus/generator.h"
#include "xattr/erasure/erasure.h"
#include "xattr/model/model.h"
#include "xattr/model/train.h"
#include "xattr/plausibility/plausibility.h"
#include "xattr/xfaith/xfaith.h"

#ifndef XATTR_VERSION
#define XATTR_VERSION "0.0.0"
#endif

namespace xattr::cli {
namespace {

namespace fs = std::filesystem;
using attribution::AttributionConfig;
using nlohmann::ordered_json;

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using AttributionsByLanguage =
    std::map<std::string, std::vector<AttributionVector>>;

struct Options {
  std::uint64_t seed = 7;
  std::string model;
  std::string data;
  std::string out;
  std::string alignments = "gold";
  std::string attributions;
  std::string method = "occlusion";
  std::string output = "tp";
  std::string agg;
  std::string bins = "0.01,0.05,0.1,0.2,0.5";
  double threshold = -1.0;
  std::string format = "json";
  std::string split = "test";
  std::string language;
  std::size_t limit = 0;
  int ig_steps = attribution::kDefaultIgSteps;
  int lime_samples = attribution::kDefaultLimeSamples;
  int shapley_samples = attribution::kDefaultShapleySamples;
  // gen-corpus
  std::size_t n = 1000;
  std::size_t languages = 3;
  double split_fraction = 0.8;
  // train
  int epochs = 30;
  double lr = 0.1;
  std::size_t hidden = 32;
  std::size_t embedding = 16;
  std::string activation = "relu";
  // cka
  std::size_t batch_size = 8;
  std::size_t random_batches = 10;
  std::string source_reps;
  std::string target_reps;
  // report
  std::string input;
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  const CLI::App* sub = nullptr;
  std::vector<std::string> args;
  std::string started;
  std::vector<std::string> inputs;
};

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const Context& ctx, const fs::path& path,
                    const std::vector<std::string>& outputs) {
  ordered_json m;
  m["subcommand"] = ctx.sub->get_name();
  m["version"] = XATTR_VERSION;
  m["arguments"] = ctx.args;
  ordered_json flags = ordered_json::object();
  for (const CLI::Option* opt : ctx.sub->get_options()) {
    const std::string name = opt->get_name();
    if (name == "--help" || name == "-h") continue;
    const auto& results = opt->results();
    if (results.empty()) {
      flags[name] = opt->get_default_str();
    } else if (results.size() == 1) {
      flags[name] = results.front();
    } else {
      flags[name] = results;
    }
  }
  m["flags"] = flags;
  m["seeds"] = {{"seed", flags.contains("--seed") ? flags["--seed"]
                                                  : ordered_json(nullptr)}};
  m["inputs"] = ctx.inputs;
  m["outputs"] = outputs;
  m["threads"] = configured_threads();
  m["started"] = ctx.started;
  m["finished"] = utc_now();
  write_file_atomic(path, m.dump(2) + "\n");
}

// Manifest for a single output file sits next to it.
void write_file_manifest(const Context& ctx, const fs::path& output) {
  write_manifest(ctx, fs::path(output.string() + ".manifest.json"),
                 {output.string()});
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

std::vector<double> parse_bins(const std::string& text) {
  std::vector<double> bins;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    const std::string item = text.substr(start, end - start);
    double value = 0.0;
    const auto [ptr, ec] =
        std::from_chars(item.data(), item.data() + item.size(), value);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw UsageError("invalid --bins entry '" + item + "'");
    }
    bins.push_back(value);
    start = end + 1;
  }
  return bins;
}

// Flag values name enums; a bad spelling is a usage error, not a data error.
template <typename Fn>
auto parse_flag(Fn parse, const std::string& value, const char* flag) {
  try {
    return parse(value);
  } catch (const DataError&) {
    throw UsageError("invalid " + std::string(flag) + " '" + value + "'");
  }
}

AttributionConfig make_config(const Options& o) {
  AttributionConfig config;
  config.method = parse_flag(parse_method, o.method, "--method");
  config.output = parse_flag(parse_output, o.output, "--output");
  config.aggregation =
      o.agg.empty()
          ? (is_word_level(config.method) ? Aggregation::kNone
                                          : Aggregation::kL2)
          : parse_flag(parse_aggregation, o.agg, "--agg");
  config.ig_steps = o.ig_steps;
  config.lime_samples = o.lime_samples;
  config.shapley_samples = o.shapley_samples;
  config.seed = o.seed;
  config.validate();
  return config;
}

corpus::CorpusData load_data(Context& ctx, const Options& o) {
  require(o.data, "--data");
  ctx.inputs.push_back(o.data);
  return corpus::load_corpus(o.data);
}

model::ModelParams load_model(Context& ctx, const Options& o) {
  require(o.model, "--model");
  ctx.inputs.push_back(o.model);
  return model::load_checkpoint(o.model);
}

const std::vector<DatasetEntry>& split_entries(const corpus::CorpusData& data,
                                               const std::string& language,
                                               const std::string& split) {
  if (split != "train" && split != "test") {
    throw UsageError("--split must be train or test");
  }
  const auto& by_language = split == "train" ? data.train : data.test;
  const auto it = by_language.find(language);
  if (it == by_language.end()) {
    throw DataError("no " + split + " split for language '" + language + "'");
  }
  return it->second;
}

std::vector<DatasetEntry> limited_entries(const corpus::CorpusData& data,
                                          const std::string& language,
                                          const Options& o) {
  const auto& all = split_entries(data, language, o.split);
  const std::size_t n =
      o.limit == 0 ? all.size() : std::min(o.limit, all.size());
  return {all.begin(), all.begin() + std::ptrdiff_t(n)};
}

std::vector<TokenizedPair> pairs_of(const std::vector<DatasetEntry>& entries) {
  std::vector<TokenizedPair> pairs;
  pairs.reserve(entries.size());
  for (const DatasetEntry& e : entries) pairs.push_back(e.pair);
  return pairs;
}

std::vector<std::string> selected_languages(const corpus::CorpusData& data,
                                            const Options& o) {
  if (o.language.empty()) return data.languages;
  if (std::find(data.languages.begin(), data.languages.end(), o.language) ==
      data.languages.end()) {
    throw DataError("unknown language '" + o.language + "'");
  }
  return {o.language};
}

AttributionsByLanguage attribute_languages(
    const model::ModelParams& params, const corpus::CorpusData& data,
    const std::vector<std::string>& languages, const Options& o,
    const AttributionConfig& config) {
  AttributionsByLanguage out;
  for (const std::string& language : languages) {
    const std::vector<TokenizedPair> pairs =
        pairs_of(limited_entries(data, language, o));
    out[language] = attribution::attribute_all(params, pairs, config);
  }
  return out;
}

std::map<std::string, AttributionVector> by_id(
    const std::vector<AttributionVector>& vectors) {
  std::map<std::string, AttributionVector> out;
  for (const AttributionVector& v : vectors) out.emplace(v.instance_id, v);
  return out;
}

std::map<std::string, HighlightMask> golds_of(
    const std::vector<DatasetEntry>& entries) {
  std::map<std::string, HighlightMask> out;
  for (const DatasetEntry& e : entries) {
    if (e.highlight) out.emplace(e.pair.id, *e.highlight);
  }
  return out;
}

// Alignments per target language: the corpus' own ("gold"), seeded random
// ones ("random") or align.<lang>.txt files from a directory.
xfaith::AlignmentsByLanguage resolve_alignments(
    Context& ctx, const corpus::CorpusData& data,
    const AttributionsByLanguage& attributions, const Options& o) {
  const std::string& source = data.source_language();
  if (o.alignments == "gold") return data.alignments;
  xfaith::AlignmentsByLanguage out;
  if (o.alignments == "random") {
    const auto source_scores = by_id(attributions.at(source));
    for (const auto& [language, vectors] : attributions) {
      if (language == source) continue;
      for (const AttributionVector& target : vectors) {
        const auto src = source_scores.find(target.instance_id);
        if (src == source_scores.end()) continue;
        AlignmentSet set = xfaith::random_alignments(
            src->second.scores.size(), target.scores.size(),
            instance_seed(o.seed, "align\x1f" + language + '\x1f' +
                                      target.instance_id));
        set.instance_id = target.instance_id;
        set.source_language = source;
        set.target_language = language;
        out[language].emplace(target.instance_id, std::move(set));
      }
    }
    return out;
  }
  ctx.inputs.push_back(o.alignments);
  for (const std::string& language : data.languages) {
    if (language == source) continue;
    const fs::path file = fs::path(o.alignments) / ("align." + language + ".txt");
    if (!fs::exists(file)) continue;
    for (AlignmentSet& set : parse_alignments(file, source, language)) {
      out[language].emplace(set.instance_id, std::move(set));
    }
  }
  return out;
}

AttributionsByLanguage load_attributions(Context& ctx,
                                         const corpus::CorpusData& data,
                                         const Options& o) {
  ctx.inputs.push_back(o.attributions);
  AttributionsByLanguage out;
  for (const std::string& language : data.languages) {
    const fs::path file =
        fs::path(o.attributions) / ("attr." + language + ".jsonl");
    if (fs::exists(file)) out[language] = parse_attributions(file);
  }
  if (out.find(data.source_language()) == out.end()) {
    throw DataError("no attributions for the source language in '" +
                    o.attributions + "'");
  }
  return out;
}

EvalReport xfaith_report(Context& ctx, const corpus::CorpusData& data,
                         const AttributionsByLanguage& attributions,
                         const Options& o) {
  const std::string& source = data.source_language();
  xfaith::ScoresByLanguage targets;
  for (const auto& [language, vectors] : attributions) {
    if (language != source) targets[language] = by_id(vectors);
  }
  xfaith::XfaithOptions options;
  options.source_language = source;
  EvalReport report = xfaith::crosslingual_faithfulness(
      by_id(attributions.at(source)), targets,
      resolve_alignments(ctx, data, attributions, o), options);
  report.config["alignments"] =
      o.alignments == "gold" || o.alignments == "random" ? o.alignments
                                                         : "file";
  return report;
}

void emit_report(Context& ctx, const EvalReport& report, const Options& o) {
  const ReportFormat format = parse_report_format(o.format);
  if (o.out.empty()) {
    ctx.out << format_report(report, format);
    return;
  }
  write_report(report, o.out, format);
  write_file_manifest(ctx, o.out);
}

// --- subcommands ------------------------------------------------------------

int cmd_gen_corpus(Context& ctx, const Options& o) {
  require(o.out, "--out");
  corpus::CorpusOptions options;
  options.seed = o.seed;
  options.n_instances = o.n;
  options.languages = o.languages;
  options.split_fraction = o.split_fraction;
  const corpus::SyntheticCorpus corpus = corpus::generate(options);
  corpus::write_corpus(corpus, o.out);
  write_manifest(ctx, fs::path(o.out) / "manifest.json", {o.out});
  ctx.out << "wrote " << corpus.entries.front().size() << " instances in "
          << corpus.languages.size() << " languages to " << o.out << "\n";
  return kExitOk;
}

int cmd_train(Context& ctx, const Options& o) {
  require(o.out, "--out");
  const corpus::CorpusData data = load_data(ctx, o);
  std::vector<TokenizedPair> train;
  std::vector<TokenizedPair> test;
  for (const std::string& language : data.languages) {
    for (const auto& e : split_entries(data, language, "train")) {
      train.push_back(e.pair);
    }
    for (const auto& e : split_entries(data, language, "test")) {
      test.push_back(e.pair);
    }
  }
  model::HiddenActivation activation;
  if (o.activation == "relu") {
    activation = model::HiddenActivation::kRelu;
  } else if (o.activation == "identity") {
    activation = model::HiddenActivation::kIdentity;
  } else {
    throw UsageError("--activation must be relu or identity");
  }
  model::ModelDims dims;
  dims.embedding = o.embedding;
  dims.hidden = o.hidden;
  model::ModelParams params = model::init_params(
      model::Vocabulary::from_pairs(train), o.seed, dims, activation);
  const model::TrainResult result =
      model::train(std::move(params), train, o.epochs, o.lr, o.seed);
  model::save_checkpoint(result.params, o.out);
  write_file_manifest(ctx, o.out);
  ctx.out << "train_accuracy=" << format_double(result.train_accuracy)
          << " test_accuracy="
          << format_double(model::accuracy(result.params, test)) << "\n";
  return kExitOk;
}

int cmd_attribute(Context& ctx, const Options& o) {
  require(o.out, "--out");
  const corpus::CorpusData data = load_data(ctx, o);
  const model::ModelParams params = load_model(ctx, o);
  const AttributionConfig config = make_config(o);
  const AttributionsByLanguage attributions = attribute_languages(
      params, data, selected_languages(data, o), o, config);
  std::vector<std::string> outputs;
  for (const auto& [language, vectors] : attributions) {
    const fs::path file = fs::path(o.out) / ("attr." + language + ".jsonl");
    write_attributions(vectors, file);
    outputs.push_back(file.string());
  }
  write_manifest(ctx, fs::path(o.out) / "manifest.json", outputs);
  return kExitOk;
}

int cmd_eval_xfaith(Context& ctx, const Options& o) {
  const corpus::CorpusData data = load_data(ctx, o);
  AttributionsByLanguage attributions;
  if (!o.attributions.empty()) {
    attributions = load_attributions(ctx, data, o);
  } else {
    const model::ModelParams params = load_model(ctx, o);
    attributions =
        attribute_languages(params, data, data.languages, o, make_config(o));
  }
  emit_report(ctx, xfaith_report(ctx, data, attributions, o), o);
  return kExitOk;
}

std::string report_language(const corpus::CorpusData& data, const Options& o) {
  return selected_languages(data, o).front();
}

int cmd_eval_erasure(Context& ctx, const Options& o) {
  const corpus::CorpusData data = load_data(ctx, o);
  const model::ModelParams params = load_model(ctx, o);
  const std::string language =
      o.language.empty() ? data.source_language() : report_language(data, o);
  const std::vector<TokenizedPair> pairs =
      pairs_of(limited_entries(data, language, o));
  erasure::ErasureConfig config;
  config.bin_fractions = parse_bins(o.bins);
  config.validate();
  const std::vector<AttributionVector> attributions =
      attribution::attribute_all(params, pairs, make_config(o));
  EvalReport report = erasure::erasure_report(erasure::ModelClassifier(params),
                                              pairs, attributions, config);
  report.config["language"] = language;
  emit_report(ctx, report, o);
  return kExitOk;
}

int cmd_eval_plaus(Context& ctx, const Options& o) {
  const corpus::CorpusData data = load_data(ctx, o);
  const model::ModelParams params = load_model(ctx, o);
  const std::string language =
      o.language.empty() ? data.source_language() : report_language(data, o);
  const std::vector<DatasetEntry> entries = limited_entries(data, language, o);
  const std::vector<AttributionVector> attributions =
      attribution::attribute_all(params, pairs_of(entries), make_config(o));
  const auto golds = golds_of(entries);
  EvalReport report = plausibility::map_score(by_id(attributions), golds);
  report.config["language"] = language;

  std::vector<std::vector<double>> scores;
  std::vector<std::vector<bool>> masks;
  for (const AttributionVector& v : attributions) {
    const auto gold = golds.find(v.instance_id);
    if (gold == golds.end()) continue;
    scores.push_back(v.scores);
    masks.push_back(gold->second.mask);
  }
  const std::vector<double> grid = plausibility::default_threshold_grid();
  const plausibility::ThresholdSearchResult best =
      plausibility::best_f1_threshold(scores, masks, grid);
  report.metrics["best_threshold"] = best.threshold;
  report.metrics["best_f1"] = best.f1_at_threshold;
  if (o.threshold >= 0.0) {
    const std::vector<double> single = {o.threshold};
    const plausibility::ThresholdPoint at =
        plausibility::best_f1_threshold(scores, masks, single).grid.front();
    report.config["threshold"] = format_double(o.threshold);
    report.metrics["precision_at_threshold"] = at.precision;
    report.metrics["recall_at_threshold"] = at.recall;
    report.metrics["f1_at_threshold"] = at.f1;
  }
  emit_report(ctx, report, o);
  return kExitOk;
}

int cmd_build_exnli(Context& ctx, const Options& o) {
  require(o.out, "--out");
  const corpus::CorpusData data = load_data(ctx, o);
  const model::ModelParams params = load_model(ctx, o);
  const std::string& source = data.source_language();
  const AttributionsByLanguage attributions =
      attribute_languages(params, data, data.languages, o, make_config(o));

  plausibility::ExnliInputs inputs;
  inputs.source_language = source;
  inputs.source = limited_entries(data, source, o);
  inputs.source_scores = by_id(attributions.at(source));
  for (const std::string& language : data.languages) {
    if (language == source) continue;
    inputs.targets[language] = limited_entries(data, language, o);
    inputs.target_scores[language] = by_id(attributions.at(language));
  }
  inputs.alignments = resolve_alignments(ctx, data, attributions, o);

  if (o.threshold >= 0.0) {
    inputs.threshold = o.threshold;
  } else {
    // Pick the threshold that best recovers the source gold highlights.
    std::vector<std::vector<double>> scores;
    std::vector<std::vector<bool>> masks;
    for (const DatasetEntry& e : inputs.source) {
      if (!e.highlight) continue;
      scores.push_back(inputs.source_scores.at(e.pair.id).scores);
      masks.push_back(e.highlight->mask);
    }
    const std::vector<double> grid = plausibility::default_threshold_grid();
    inputs.threshold =
        plausibility::best_f1_threshold(scores, masks, grid).threshold;
  }

  plausibility::ExnliResult result = plausibility::build_exnli(inputs);
  const AttributionConfig config = make_config(o);
  result.report.config["method"] = std::string(to_string(config.method));
  result.report.config["output"] = std::string(to_string(config.output));
  result.report.config["aggregation"] =
      std::string(to_string(config.aggregation));
  std::vector<std::string> outputs;
  for (const auto& [language, entries] : result.datasets) {
    const fs::path file = fs::path(o.out) / (language + ".exnli.jsonl");
    write_dataset(entries, file);
    outputs.push_back(file.string());
  }
  for (const auto& [key, note] : result.report.notes) {
    if (key.rfind("omitted.", 0) == 0) {
      ctx.err << "warning: " << key << ": " << note << "\n";
    }
  }
  const ReportFormat format = parse_report_format(o.format);
  const fs::path report_file =
      fs::path(o.out) /
      (format == ReportFormat::kJson ? "report.json" : "report.csv");
  write_report(result.report, report_file, format);
  outputs.push_back(report_file.string());
  write_manifest(ctx, fs::path(o.out) / "manifest.json", outputs);
  return kExitOk;
}

int cmd_cka(Context& ctx, const Options& o) {
  cka::MatchingOptions options;
  options.batch_size = o.batch_size;
  options.random_batches = o.random_batches;
  options.seed = o.seed;
  EvalReport report;
  report.config["n"] = std::to_string(o.batch_size);
  report.config["k"] = std::to_string(o.random_batches);

  if (!o.source_reps.empty() || !o.target_reps.empty()) {
    require(o.source_reps, "--source-reps");
    require(o.target_reps, "--target-reps");
    ctx.inputs.push_back(o.source_reps);
    ctx.inputs.push_back(o.target_reps);
    const cka::RepresentationBatch source =
        cka::parse_representations(o.source_reps, "source");
    const cka::RepresentationBatch target =
        cka::parse_representations(o.target_reps, "target");
    const cka::MatchingResult result =
        cka::batch_matching_accuracy(source, target, options);
    report.metrics["accuracy"] = result.accuracy;
    report.metrics["batches"] = double(result.batches);
    report.metrics["wins"] = double(result.wins);
    emit_report(ctx, report, o);
    return kExitOk;
  }

  const corpus::CorpusData data = load_data(ctx, o);
  const model::ModelParams params = load_model(ctx, o);
  const std::string& source_language = data.source_language();
  const std::vector<DatasetEntry> source_entries =
      limited_entries(data, source_language, o);
  const std::vector<TokenizedPair> source_pairs = pairs_of(source_entries);
  const cka::RepresentationBatch source =
      cka::hidden_representations(params, source_pairs, source_language);
  std::vector<double> accuracies;
  for (const std::string& language : data.languages) {
    if (language == source_language) continue;
    if (!o.language.empty() && language != o.language) continue;
    // Pair target instances with the source by id.
    std::map<std::string, const TokenizedPair*> target_by_id;
    const auto& target_entries = split_entries(data, language, o.split);
    for (const DatasetEntry& e : target_entries) {
      target_by_id[e.pair.id] = &e.pair;
    }
    std::vector<TokenizedPair> target_pairs;
    for (const TokenizedPair& p : source_pairs) {
      const auto it = target_by_id.find(p.id);
      if (it == target_by_id.end()) {
        throw DataError("instance '" + p.id + "' missing in " + language);
      }
      target_pairs.push_back(*it->second);
    }
    const cka::MatchingResult result = cka::batch_matching_accuracy(
        source, cka::hidden_representations(params, target_pairs, language),
        options);
    report.per_language[language] = result.accuracy;
    accuracies.push_back(result.accuracy);
  }
  if (accuracies.empty()) throw DataError("no target language to compare");
  report.config["source_language"] = source_language;
  report.metrics["accuracy_mean"] = pairwise_mean(accuracies);
  emit_report(ctx, report, o);
  return kExitOk;
}

const std::vector<std::string>& sweep_metrics() {
  static const std::vector<std::string> kMetrics = {"rho", "comp", "suff",
                                                    "map"};
  return kMetrics;
}

int cmd_sweep(Context& ctx, const Options& o) {
  require(o.out, "--out");
  const corpus::CorpusData data = load_data(ctx, o);
  const model::ModelParams params = load_model(ctx, o);
  const std::string& source = data.source_language();
  const std::vector<DatasetEntry> source_entries =
      limited_entries(data, source, o);
  const std::vector<TokenizedPair> source_pairs = pairs_of(source_entries);
  const auto golds = golds_of(source_entries);
  const erasure::ModelClassifier classifier(params);
  erasure::ErasureConfig erasure_config;
  erasure_config.bin_fractions = parse_bins(o.bins);
  erasure_config.validate();

  const std::vector<OutputMechanism> outputs = {OutputMechanism::kTopPrediction,
                                                OutputMechanism::kLoss};
  SweepTable table;
  for (const std::string& metric : sweep_metrics()) {
    table.columns.push_back(metric + "_tp");
    table.columns.push_back(metric + "_loss");
  }
  for (const attribution::GridRow& row : attribution::evaluation_grid()) {
    table.rows.push_back(attribution::grid_row_name(row));
    std::vector<std::optional<double>> cells(table.columns.size());
    for (std::size_t k = 0; k < outputs.size(); ++k) {
      AttributionConfig config = make_config(o);
      config.method = row.method;
      config.aggregation = row.aggregation;
      config.output = outputs[k];
      config.validate();
      const AttributionsByLanguage attributions =
          attribute_languages(params, data, data.languages, o, config);

      const EvalReport rho = xfaith_report(ctx, data, attributions, o);
      if (const auto it = rho.metrics.find("rho_overall");
          it != rho.metrics.end()) {
        cells[0 + k] = it->second;
      }
      const EvalReport erasure = erasure::erasure_report(
          classifier, source_pairs, attributions.at(source), erasure_config);
      cells[2 + k] = erasure.metrics.at("aopc_comprehensiveness");
      cells[4 + k] = erasure.metrics.at("aopc_sufficiency");
      if (!golds.empty()) {
        cells[6 + k] = plausibility::map_score(by_id(attributions.at(source)),
                                               golds)
                           .metrics.at("map");
      }
    }
    table.cells.push_back(std::move(cells));
  }
  const fs::path file = fs::path(o.out) / "sweep.csv";
  write_file_atomic(file, format_sweep_csv(table));
  write_manifest(ctx, fs::path(o.out) / "manifest.json", {file.string()});
  return kExitOk;
}

// "Saliency (L2)" -> ("Saliency", "L2"); rows without an aggregation get "".
std::pair<std::string, std::string> split_row_name(const std::string& name) {
  const std::size_t open = name.rfind(" (");
  if (open == std::string::npos || name.back() != ')') return {name, ""};
  return {name.substr(0, open),
          name.substr(open + 2, name.size() - open - 3)};
}

int cmd_report(Context& ctx, const Options& o) {
  require(o.input, "--input");
  require(o.out, "--out");
  ctx.inputs.push_back(o.input);
  const SweepTable table = parse_sweep_csv(read_file(o.input));
  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      if (table.columns[c] == name) return c;
    }
    return std::nullopt;
  };

  std::vector<std::string> outputs;
  std::string data_csv = "chart,group,series,value\n";
  auto record = [&](const std::string& chart_name, const BarChart& chart) {
    for (std::size_t g = 0; g < chart.groups.size(); ++g) {
      for (std::size_t s = 0; s < chart.series.size(); ++s) {
        const auto& v = chart.values[g][s];
        data_csv += chart_name + ",\"" + chart.groups[g] + "\",\"" +
                    chart.series[s] + "\"," + (v ? format_double(*v) : "") +
                    "\n";
      }
    }
    const fs::path file = fs::path(o.out) / (chart_name + ".svg");
    write_file_atomic(file, render_svg(chart));
    outputs.push_back(file.string());
  };

  std::vector<std::string> metrics;
  for (const std::string& c : table.columns) {
    const std::size_t cut = c.rfind('_');
    const std::string metric = cut == std::string::npos ? c : c.substr(0, cut);
    if (std::find(metrics.begin(), metrics.end(), metric) == metrics.end()) {
      metrics.push_back(metric);
    }
  }

  for (const std::string& metric : metrics) {
    const auto tp = column(metric + "_tp");
    const auto loss = column(metric + "_loss");
    if (!tp || !loss) continue;

    // Output mechanism across all configurations.
    BarChart by_output;
    by_output.title = metric + ": top prediction vs loss";
    by_output.y_label = metric;
    by_output.series = {"TopPrediction", "Loss"};
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      by_output.groups.push_back(table.rows[r]);
      by_output.values.push_back({table.cells[r][*tp], table.cells[r][*loss]});
    }
    record(metric + "_output", by_output);

    // Aggregation x output for methods that have both aggregations.
    std::vector<std::string> methods;
    std::map<std::string, std::map<std::string, std::size_t>> index;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const auto [method, agg] = split_row_name(table.rows[r]);
      if (agg.empty()) continue;
      if (index.find(method) == index.end()) methods.push_back(method);
      index[method][agg] = r;
    }
    BarChart by_aggregation;
    by_aggregation.title = metric + ": aggregation and output";
    by_aggregation.y_label = metric;
    by_aggregation.series = {"Mean, TopPrediction", "Mean, Loss",
                             "L2, TopPrediction", "L2, Loss"};
    for (const std::string& method : methods) {
      const auto& aggs = index[method];
      if (aggs.count("Mean") == 0 || aggs.count("L2") == 0) continue;
      const std::size_t mean = aggs.at("Mean");
      const std::size_t l2 = aggs.at("L2");
      by_aggregation.groups.push_back(method);
      by_aggregation.values.push_back(
          {table.cells[mean][*tp], table.cells[mean][*loss],
           table.cells[l2][*tp], table.cells[l2][*loss]});
    }
    if (!by_aggregation.groups.empty()) {
      record(metric + "_aggregation", by_aggregation);
    }
  }
  const fs::path data_file = fs::path(o.out) / "charts.csv";
  write_file_atomic(data_file, data_csv);
  outputs.push_back(data_file.string());
  write_manifest(ctx, fs::path(o.out) / "manifest.json", outputs);
  return kExitOk;
}

// --- flag registration ------------------------------------------------------

void add_seed(CLI::App* sub, Options& o) {
  sub->add_option("--seed", o.seed, "Seed for all randomness");
}
void add_model(CLI::App* sub, Options& o) {
  sub->add_option("--model", o.model, "Model checkpoint (JSON)");
}
void add_data(CLI::App* sub, Options& o) {
  sub->add_option("--data", o.data, "Corpus directory");
  sub->add_option("--split", o.split, "Split to evaluate: train or test");
  sub->add_option("--limit", o.limit,
                  "Use only the first N instances per language (0 = all)");
}
void add_method(CLI::App* sub, Options& o) {
  sub->add_option("--method", o.method, "Attribution method");
  sub->add_option("--output", o.output, "Output mechanism: tp or loss");
  sub->add_option("--agg", o.agg,
                  "Aggregation: mean, l2 or none (default: by method)");
  sub->add_option("--ig-steps", o.ig_steps, "Integrated gradients steps");
  sub->add_option("--lime-samples", o.lime_samples, "LIME samples");
  sub->add_option("--shapley-samples", o.shapley_samples,
                  "Shapley sampling permutations");
}
void add_out(CLI::App* sub, Options& o, const char* help) {
  sub->add_option("-o,--out", o.out, help);
}
void add_format(CLI::App* sub, Options& o) {
  sub->add_option("--format", o.format, "Report format: json or csv");
}
void add_alignments(CLI::App* sub, Options& o) {
  sub->add_option("--alignments", o.alignments,
                  "gold, random, or a directory of align.<lang>.txt files");
}

}  // namespace

std::string format_sweep_csv(const SweepTable& table) {
  std::string out = "configuration";
  for (const std::string& c : table.columns) out += "," + c;
  out += "\n";
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string& name = table.rows[r];
    out += name.find_first_of(",\"") == std::string::npos
               ? name
               : "\"" + name + "\"";
    for (const auto& cell : table.cells[r]) {
      out += ",";
      if (cell) out += format_double(*cell);
    }
    out += "\n";
  }
  return out;
}

SweepTable parse_sweep_csv(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
    start = end + 1;
  }
  if (lines.empty()) throw DataError("empty sweep table");

  auto split_fields = [](const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else if (c == '"') {
          quoted = false;
        } else {
          field += c;
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(field);
        field.clear();
      } else {
        field += c;
      }
    }
    fields.push_back(field);
    return fields;
  };

  SweepTable table;
  std::vector<std::string> header = split_fields(lines.front());
  if (header.empty() || header.front() != "configuration") {
    throw DataError("sweep table must start with a configuration column");
  }
  table.columns.assign(header.begin() + 1, header.end());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::vector<std::string> fields = split_fields(lines[i]);
    if (fields.size() != header.size()) {
      throw DataError("sweep table row " + std::to_string(i) +
                      " has the wrong number of fields");
    }
    table.rows.push_back(fields.front());
    std::vector<std::optional<double>> cells;
    for (std::size_t c = 1; c < fields.size(); ++c) {
      const std::string& f = fields[c];
      if (f.empty()) {
        cells.emplace_back();
        continue;
      }
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(),
                                             value);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw DataError("invalid number '" + f + "' in sweep table");
      }
      cells.push_back(value);
    }
    table.cells.push_back(std::move(cells));
  }
  return table;
}

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app("Attribution faithfulness and plausibility toolkit", "xattr");
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", XATTR_VERSION);
  Options o;
  std::map<const CLI::App*, std::function<int(Context&, const Options&)>>
      handlers;

  CLI::App* gen = app.add_subcommand("gen-corpus", "Generate the corpus");
  add_seed(gen, o);
  gen->add_option("--n", o.n, "Instances per language");
  gen->add_option("--languages", o.languages, "Number of languages");
  gen->add_option("--split-fraction", o.split_fraction,
                  "Fraction of instances in the training split");
  add_out(gen, o, "Output directory");
  handlers[gen] = cmd_gen_corpus;

  CLI::App* trn = app.add_subcommand("train", "Train the classifier");
  add_seed(trn, o);
  add_data(trn, o);
  trn->add_option("--epochs", o.epochs, "Training epochs");
  trn->add_option("--lr", o.lr, "Learning rate");
  trn->add_option("--hidden", o.hidden, "Hidden width");
  trn->add_option("--embedding", o.embedding, "Embedding width");
  trn->add_option("--activation", o.activation, "relu or identity");
  add_out(trn, o, "Checkpoint path");
  handlers[trn] = cmd_train;

  CLI::App* att = app.add_subcommand("attribute", "Compute attributions");
  add_seed(att, o);
  add_model(att, o);
  add_data(att, o);
  add_method(att, o);
  att->add_option("--language", o.language, "Only this language");
  add_out(att, o, "Output directory");
  handlers[att] = cmd_attribute;

  CLI::App* xf = app.add_subcommand("eval-xfaith",
                                    "Cross-lingual faithfulness");
  add_seed(xf, o);
  add_model(xf, o);
  add_data(xf, o);
  add_method(xf, o);
  add_alignments(xf, o);
  xf->add_option("--attributions", o.attributions,
                 "Directory of precomputed attr.<lang>.jsonl files");
  add_format(xf, o);
  add_out(xf, o, "Report path (default: stdout)");
  handlers[xf] = cmd_eval_xfaith;

  CLI::App* er = app.add_subcommand("eval-erasure",
                                    "Comprehensiveness and sufficiency");
  add_seed(er, o);
  add_model(er, o);
  add_data(er, o);
  add_method(er, o);
  er->add_option("--language", o.language, "Language (default: source)");
  er->add_option("--bins", o.bins, "Comma-separated bin fractions");
  add_format(er, o);
  add_out(er, o, "Report path (default: stdout)");
  handlers[er] = cmd_eval_erasure;

  CLI::App* pl = app.add_subcommand("eval-plaus",
                                    "MAP against gold highlights");
  add_seed(pl, o);
  add_model(pl, o);
  add_data(pl, o);
  add_method(pl, o);
  pl->add_option("--language", o.language, "Language (default: source)");
  pl->add_option("--threshold", o.threshold,
                 "Also report P/R/F1 at this threshold");
  add_format(pl, o);
  add_out(pl, o, "Report path (default: stdout)");
  handlers[pl] = cmd_eval_plaus;

  CLI::App* ex = app.add_subcommand("build-exnli",
                                    "Project highlights to all languages");
  add_seed(ex, o);
  add_model(ex, o);
  add_data(ex, o);
  add_method(ex, o);
  add_alignments(ex, o);
  ex->add_option("--threshold", o.threshold,
                 "Binarization threshold (default: best F1 on the source)");
  add_format(ex, o);
  add_out(ex, o, "Output directory");
  handlers[ex] = cmd_build_exnli;

  CLI::App* ck = app.add_subcommand("cka", "Batch-matching accuracy");
  add_seed(ck, o);
  add_model(ck, o);
  add_data(ck, o);
  ck->add_option("--language", o.language, "Only this target language");
  ck->add_option("--batch-size", o.batch_size, "Instances per batch (n)");
  ck->add_option("--random-batches", o.random_batches,
                 "Random batches per comparison (k)");
  ck->add_option("--source-reps", o.source_reps,
                 "Source representations (JSON lines)");
  ck->add_option("--target-reps", o.target_reps,
                 "Target representations (JSON lines)");
  add_format(ck, o);
  add_out(ck, o, "Report path (default: stdout)");
  handlers[ck] = cmd_cka;

  CLI::App* sw = app.add_subcommand("sweep", "Evaluate the full grid");
  add_seed(sw, o);
  add_model(sw, o);
  add_data(sw, o);
  sw->add_option("--ig-steps", o.ig_steps, "Integrated gradients steps");
  sw->add_option("--lime-samples", o.lime_samples, "LIME samples");
  sw->add_option("--shapley-samples", o.shapley_samples,
                 "Shapley sampling permutations");
  sw->add_option("--bins", o.bins, "Comma-separated bin fractions");
  add_alignments(sw, o);
  add_out(sw, o, "Output directory");
  handlers[sw] = cmd_sweep;

  CLI::App* rp = app.add_subcommand("report", "Render sweep charts");
  rp->add_option("--input", o.input, "sweep.csv from the sweep subcommand");
  add_out(rp, o, "Output directory");
  handlers[rp] = cmd_report;

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const CLI::App* sub = app.get_subcommands().front();
  Context ctx{out, err, sub, {}, utc_now(), {}};
  ctx.args.assign(args.begin() + (args.empty() ? 0 : 1), args.end());
  try {
    return handlers.at(sub)(ctx, o);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n" << sub->help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

int run(int argc, const char* const* argv) {
  return run(std::vector<std::string>(argv, argv + argc), std::cout,
             std::cerr);
}

}  // namespace xattr::cli
