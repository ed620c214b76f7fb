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

#include "xattr/attribution/attribution.h"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

#include "xattr/core/util.h"

namespace xattr::attribution {
namespace {

PerDimScores map_gradient(const EmbeddingGradient& grad,
                          const EmbeddedInput& input,
                          double (*op)(double g, double u)) {
  PerDimScores out(grad.size());
  for (std::size_t j = 0; j < grad.size(); ++j) {
    out[j].resize(grad[j].size());
    for (std::size_t k = 0; k < grad[j].size(); ++k) {
      out[j][k] = op(grad[j][k], input.rows[j][k]);
    }
  }
  return out;
}

void check_baseline(const EmbeddedInput& input,
                    std::span<const double> baseline) {
  if (input.num_words() > 0 && baseline.size() != input.rows[0].size()) {
    throw std::invalid_argument("baseline width does not match embeddings");
  }
}

std::uint64_t per_instance_seed(const AttributionConfig& config,
                                const TokenizedPair& pair) {
  // Translations share ids, so the language is part of the key.
  return instance_seed(config.seed, pair.language + '\x1f' + pair.id);
}

// Everything a model-level method needs about one instance.
struct Prepared {
  EmbeddedInput input;
  ModelObjective objective;
};

Prepared prepare(const model::ModelParams& params, const TokenizedPair& pair,
                 const AttributionConfig& config) {
  EmbeddedInput input = model::embed(params, pair);
  const model::ForwardTrace trace = model::forward(params, input);
  const model::OutputTarget target =
      model::resolve_target(trace, config.output, pair.label);
  return {std::move(input), ModelObjective(params, target)};
}

AttributionVector make_vector(const TokenizedPair& pair,
                              const AttributionConfig& config,
                              std::vector<double> scores) {
  for (double s : scores) {
    if (!std::isfinite(s)) {
      throw model::ModelError("non-finite attribution for '" + pair.id + "'");
    }
  }
  return {pair.id,           pair.language,      config.method,
          config.output,     config.aggregation, std::move(scores)};
}

bool solve_ridge(const Eigen::MatrixXd& design, const Eigen::VectorXd& target,
                 const Eigen::VectorXd& weights, double ridge,
                 Eigen::VectorXd& solution) {
  const Eigen::MatrixXd weighted = weights.asDiagonal() * design;
  Eigen::MatrixXd gram = design.transpose() * weighted;
  // Column 0 is the unpenalized intercept.
  for (Eigen::Index i = 1; i < gram.rows(); ++i) gram(i, i) += ridge;
  const Eigen::VectorXd rhs = weighted.transpose() * target;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.rcond() < 1e-14) {
    return false;
  }
  solution = ldlt.solve(rhs);
  return solution.allFinite();
}

}  // namespace

void AttributionConfig::validate() const {
  if (is_word_level(method) != (aggregation == Aggregation::kNone)) {
    throw std::invalid_argument(
        std::string(to_string(method)) + " requires aggregation " +
        (is_word_level(method) ? "None" : "Mean or L2") + ", got " +
        std::string(to_string(aggregation)));
  }
  if (ig_steps < 1) throw std::invalid_argument("ig_steps must be >= 1");
  if (lime_samples < 1) {
    throw std::invalid_argument("lime_samples must be >= 1");
  }
  if (shapley_samples < 1) {
    throw std::invalid_argument("shapley_samples must be >= 1");
  }
}

double ModelObjective::value(const EmbeddedInput& input) const {
  return model::objective_value(model::forward(params_, input), target_);
}

EmbeddingGradient ModelObjective::gradient(const EmbeddedInput& input,
                                           GradientMode mode) const {
  return model::gradient_at(params_, input, target_, mode);
}

std::vector<double> aggregate(const PerDimScores& per_dim, Aggregation kind) {
  if (per_dim.empty()) throw std::invalid_argument("nothing to aggregate");
  if (kind == Aggregation::kNone) {
    throw std::invalid_argument("aggregation None has no reduction");
  }
  std::vector<double> out;
  out.reserve(per_dim.size());
  for (const std::vector<double>& row : per_dim) {
    if (row.empty()) throw std::invalid_argument("zero-width score row");
    double total = 0.0;
    if (kind == Aggregation::kMean) {
      for (double u : row) total += u;
      out.push_back(total / double(row.size()));
    } else {
      for (double u : row) total += u * u;
      out.push_back(std::sqrt(total));
    }
  }
  return out;
}

EmbeddedInput with_baseline(const EmbeddedInput& input,
                            std::span<const double> baseline,
                            const std::vector<bool>& replace) {
  EmbeddedInput out = input;
  for (std::size_t j = 0; j < out.rows.size(); ++j) {
    if (replace[j]) out.rows[j].assign(baseline.begin(), baseline.end());
  }
  return out;
}

PerDimScores saliency_per_dim(const Objective& f, const EmbeddedInput& input) {
  return map_gradient(f.gradient(input, GradientMode::kPlain), input,
                      [](double g, double) { return std::abs(g); });
}

PerDimScores input_x_gradient_per_dim(const Objective& f,
                                      const EmbeddedInput& input) {
  return map_gradient(f.gradient(input, GradientMode::kPlain), input,
                      [](double g, double u) { return g * u; });
}

PerDimScores guided_backprop_per_dim(const Objective& f,
                                     const EmbeddedInput& input) {
  return f.gradient(input, GradientMode::kGuided);
}

PerDimScores integrated_gradients_per_dim(const Objective& f,
                                          const EmbeddedInput& input,
                                          std::span<const double> baseline,
                                          int steps) {
  if (steps < 1) throw std::invalid_argument("ig_steps must be >= 1");
  check_baseline(input, baseline);
  const std::size_t n = input.num_words();
  const std::size_t d = baseline.size();
  PerDimScores summed(n, std::vector<double>(d, 0.0));
  EmbeddedInput point = input;
  for (int l = 1; l <= steps; ++l) {
    const double alpha = double(l) / double(steps);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < d; ++k) {
        point.rows[j][k] =
            baseline[k] + alpha * (input.rows[j][k] - baseline[k]);
      }
    }
    const EmbeddingGradient grad = f.gradient(point, GradientMode::kPlain);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < d; ++k) summed[j][k] += grad[j][k];
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < d; ++k) {
      summed[j][k] *= (input.rows[j][k] - baseline[k]) / double(steps);
    }
  }
  return summed;
}

PerDimScores activation_per_dim(const EmbeddedInput& input) {
  return input.rows;
}

std::vector<double> occlusion_scores(const Objective& f,
                                     const EmbeddedInput& input,
                                     std::span<const double> baseline) {
  check_baseline(input, baseline);
  const double full = f.value(input);
  std::vector<double> scores(input.num_words());
  EmbeddedInput occluded = input;
  for (std::size_t j = 0; j < input.num_words(); ++j) {
    occluded.rows[j].assign(baseline.begin(), baseline.end());
    scores[j] = full - f.value(occluded);
    occluded.rows[j] = input.rows[j];
  }
  return scores;
}

std::vector<double> shapley_over_permutations(
    const Objective& f, const EmbeddedInput& input,
    std::span<const double> baseline,
    std::span<const std::vector<std::size_t>> permutations) {
  check_baseline(input, baseline);
  if (permutations.empty()) {
    throw std::invalid_argument("at least one permutation is required");
  }
  const std::size_t n = input.num_words();
  const EmbeddedInput empty =
      with_baseline(input, baseline, std::vector<bool>(n, true));
  const double empty_value = f.value(empty);
  std::vector<double> totals(n, 0.0);
  for (const std::vector<std::size_t>& order : permutations) {
    if (order.size() != n) {
      throw std::invalid_argument("permutation length mismatch");
    }
    EmbeddedInput current = empty;
    double previous = empty_value;
    for (std::size_t j : order) {
      current.rows.at(j) = input.rows[j];
      const double value = f.value(current);
      totals[j] += value - previous;
      previous = value;
    }
  }
  for (double& t : totals) t /= double(permutations.size());
  return totals;
}

std::vector<double> shapley_sampling_scores(const Objective& f,
                                            const EmbeddedInput& input,
                                            std::span<const double> baseline,
                                            int samples, std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("shapley_samples must be >= 1");
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> permutations;
  permutations.reserve(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    permutations.push_back(rng.permutation(input.num_words()));
  }
  return shapley_over_permutations(f, input, baseline, permutations);
}

std::vector<double> lime_scores(const Objective& f, const EmbeddedInput& input,
                                std::span<const double> baseline,
                                const LimeOptions& options,
                                std::uint64_t seed) {
  if (options.samples < 1) {
    throw std::invalid_argument("lime_samples must be >= 1");
  }
  check_baseline(input, baseline);
  const std::size_t n = input.num_words();
  const auto rows = static_cast<Eigen::Index>(options.samples);
  const auto cols = static_cast<Eigen::Index>(n + 1);

  Rng rng(seed);
  Eigen::MatrixXd design(rows, cols);
  Eigen::VectorXd target(rows);
  Eigen::VectorXd weights(rows);
  std::vector<bool> removed(n);
  for (Eigen::Index s = 0; s < rows; ++s) {
    design(s, 0) = 1.0;
    std::size_t removed_count = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const bool keep = rng.bernoulli(options.keep_probability);
      removed[j] = !keep;
      removed_count += keep ? 0 : 1;
      design(s, static_cast<Eigen::Index>(j + 1)) = keep ? 1.0 : 0.0;
    }
    target(s) = f.value(with_baseline(input, baseline, removed));
    const double distance = double(removed_count) / double(n);
    weights(s) = std::exp(-(distance * distance) /
                          (options.kernel_width * options.kernel_width));
  }

  Eigen::VectorXd solution;
  if (!solve_ridge(design, target, weights, options.ridge, solution) &&
      !solve_ridge(design, target, weights, 10.0 * options.ridge, solution)) {
    throw std::runtime_error("LIME surrogate design matrix is degenerate");
  }
  std::vector<double> scores(n);
  for (std::size_t j = 0; j < n; ++j) {
    scores[j] = solution(static_cast<Eigen::Index>(j + 1));
  }
  return scores;
}

AttributionVector saliency(const model::ModelParams& params,
                           const TokenizedPair& pair,
                           const AttributionConfig& config) {
  const Prepared p = prepare(params, pair, config);
  return make_vector(pair, config,
                     aggregate(saliency_per_dim(p.objective, p.input),
                               config.aggregation));
}

AttributionVector input_x_gradient(const model::ModelParams& params,
                                   const TokenizedPair& pair,
                                   const AttributionConfig& config) {
  const Prepared p = prepare(params, pair, config);
  return make_vector(pair, config,
                     aggregate(input_x_gradient_per_dim(p.objective, p.input),
                               config.aggregation));
}

AttributionVector guided_backprop(const model::ModelParams& params,
                                  const TokenizedPair& pair,
                                  const AttributionConfig& config) {
  const Prepared p = prepare(params, pair, config);
  return make_vector(pair, config,
                     aggregate(guided_backprop_per_dim(p.objective, p.input),
                               config.aggregation));
}

AttributionVector integrated_gradients(const model::ModelParams& params,
                                       const TokenizedPair& pair,
                                       const AttributionConfig& config) {
  const Prepared p = prepare(params, pair, config);
  return make_vector(
      pair, config,
      aggregate(integrated_gradients_per_dim(p.objective, p.input,
                                             params.pad_embedding(),
                                             config.ig_steps),
                config.aggregation));
}

AttributionVector lime(const model::ModelParams& params,
                       const TokenizedPair& pair,
                       const AttributionConfig& config) {
  const Prepared p = prepare(params, pair, config);
  LimeOptions options;
  options.samples = config.lime_samples;
  return make_vector(pair, config,
                     lime_scores(p.objective, p.input, params.pad_embedding(),
                                 options, per_instance_seed(config, pair)));
}

AttributionVector occlusion(const model::ModelParams& params,
                            const TokenizedPair& pair,
                            const AttributionConfig& config) {
  const Prepared p = prepare(params, pair, config);
  return make_vector(
      pair, config,
      occlusion_scores(p.objective, p.input, params.pad_embedding()));
}

AttributionVector shapley_sampling(const model::ModelParams& params,
                                   const TokenizedPair& pair,
                                   const AttributionConfig& config) {
  const Prepared p = prepare(params, pair, config);
  return make_vector(
      pair, config,
      shapley_sampling_scores(p.objective, p.input, params.pad_embedding(),
                              config.shapley_samples,
                              per_instance_seed(config, pair)));
}

AttributionVector layer_activation(const model::ModelParams& params,
                                   const TokenizedPair& pair,
                                   const AttributionConfig& config) {
  return make_vector(pair, config,
                     aggregate(activation_per_dim(model::embed(params, pair)),
                               config.aggregation));
}

AttributionVector attribute(const model::ModelParams& params,
                            const TokenizedPair& pair,
                            const AttributionConfig& config) {
  config.validate();
  switch (config.method) {
    case Method::kSaliency:
      return saliency(params, pair, config);
    case Method::kInputXGradient:
      return input_x_gradient(params, pair, config);
    case Method::kGuidedBackprop:
      return guided_backprop(params, pair, config);
    case Method::kIntegratedGradients:
      return integrated_gradients(params, pair, config);
    case Method::kLime:
      return lime(params, pair, config);
    case Method::kOcclusion:
      return occlusion(params, pair, config);
    case Method::kShapleySampling:
      return shapley_sampling(params, pair, config);
    case Method::kActivation:
      return layer_activation(params, pair, config);
  }
  throw std::invalid_argument("unknown attribution method");
}

std::vector<AttributionVector> attribute_all(
    const model::ModelParams& params, std::span<const TokenizedPair> pairs,
    const AttributionConfig& config) {
  config.validate();
  std::vector<AttributionVector> out(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    out[i] = attribute(params, pairs[i], config);
  });
  return out;
}

const std::vector<GridRow>& evaluation_grid() {
  static const std::vector<GridRow> kGrid = {
      {Method::kInputXGradient, Aggregation::kMean},
      {Method::kInputXGradient, Aggregation::kL2},
      {Method::kSaliency, Aggregation::kMean},
      {Method::kSaliency, Aggregation::kL2},
      {Method::kGuidedBackprop, Aggregation::kMean},
      {Method::kGuidedBackprop, Aggregation::kL2},
      {Method::kIntegratedGradients, Aggregation::kMean},
      {Method::kIntegratedGradients, Aggregation::kL2},
      {Method::kActivation, Aggregation::kMean},
      {Method::kActivation, Aggregation::kL2},
      {Method::kLime, Aggregation::kNone},
      {Method::kOcclusion, Aggregation::kNone},
      {Method::kShapleySampling, Aggregation::kNone},
  };
  return kGrid;
}

std::string grid_row_name(const GridRow& row) {
  std::string name(to_string(row.method));
  if (row.aggregation != Aggregation::kNone) {
    name += " (" + std::string(to_string(row.aggregation)) + ")";
  }
  return name;
}

}  // namespace xattr::attribution
