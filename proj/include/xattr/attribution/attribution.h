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

// Word-level feature attribution.
//
// Every method is written against Objective, a scalar function of the word
// embeddings of one instance. ModelObjective binds it to the minimodel with a
// frozen output target; tests bind it to linear and additive oracles.
//
// Gradient methods produce a words x dims matrix of per-dimension scores
// that is then collapsed with aggregate(). Perturbation methods (LIME,
// Occlusion, Shapley sampling) replace whole word embeddings with the [PAD]
// embedding and produce one score per word directly.

#ifndef XATTR_ATTRIBUTION_ATTRIBUTION_H_
#define XATTR_ATTRIBUTION_ATTRIBUTION_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "xattr/core/types.h"
#include "xattr/model/model.h"

namespace xattr::attribution {

using model::EmbeddedInput;
using model::EmbeddingGradient;
using model::GradientMode;

// words x dims scores before aggregation.
using PerDimScores = std::vector<std::vector<double>>;

inline constexpr int kDefaultIgSteps = 50;
inline constexpr int kDefaultLimeSamples = 50;
inline constexpr int kDefaultShapleySamples = 25;

struct AttributionConfig {
  Method method = Method::kSaliency;
  OutputMechanism output = OutputMechanism::kTopPrediction;
  Aggregation aggregation = Aggregation::kL2;
  int ig_steps = kDefaultIgSteps;
  int lime_samples = kDefaultLimeSamples;
  int shapley_samples = kDefaultShapleySamples;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument on a method/aggregation mismatch or
  // non-positive step/sample counts.
  void validate() const;
};

class Objective {
 public:
  virtual ~Objective() = default;
  virtual double value(const EmbeddedInput& input) const = 0;
  virtual EmbeddingGradient gradient(const EmbeddedInput& input,
                                     GradientMode mode) const = 0;
};

class ModelObjective : public Objective {
 public:
  ModelObjective(const model::ModelParams& params, model::OutputTarget target)
      : params_(params), target_(target) {}

  double value(const EmbeddedInput& input) const override;
  EmbeddingGradient gradient(const EmbeddedInput& input,
                             GradientMode mode) const override;

 private:
  const model::ModelParams& params_;
  model::OutputTarget target_;
};

// Mean: (1/d) sum_k u_jk. L2: sqrt(sum_k u_jk^2). Throws on empty input or
// Aggregation::kNone.
std::vector<double> aggregate(const PerDimScores& per_dim, Aggregation kind);

// Copy of `input` with the listed words replaced by `baseline`.
EmbeddedInput with_baseline(const EmbeddedInput& input,
                            std::span<const double> baseline,
                            const std::vector<bool>& replace);

// --- per-dimension methods over an arbitrary objective ----------------------

PerDimScores saliency_per_dim(const Objective& f, const EmbeddedInput& input);
PerDimScores input_x_gradient_per_dim(const Objective& f,
                                      const EmbeddedInput& input);
PerDimScores guided_backprop_per_dim(const Objective& f,
                                     const EmbeddedInput& input);
// (u - baseline) * (1/m) * sum_{l=1..m} grad f(baseline + (l/m)(u - baseline))
PerDimScores integrated_gradients_per_dim(const Objective& f,
                                          const EmbeddedInput& input,
                                          std::span<const double> baseline,
                                          int steps);
PerDimScores activation_per_dim(const EmbeddedInput& input);

// --- word-level perturbation methods ----------------------------------------

// f(x) - f(x with word j set to baseline).
std::vector<double> occlusion_scores(const Objective& f,
                                     const EmbeddedInput& input,
                                     std::span<const double> baseline);

// Average marginal contribution of each word when words are added one by
// one, in the given orders, to the all-baseline input.
std::vector<double> shapley_over_permutations(
    const Objective& f, const EmbeddedInput& input,
    std::span<const double> baseline,
    std::span<const std::vector<std::size_t>> permutations);
std::vector<double> shapley_sampling_scores(const Objective& f,
                                            const EmbeddedInput& input,
                                            std::span<const double> baseline,
                                            int samples, std::uint64_t seed);

struct LimeOptions {
  int samples = kDefaultLimeSamples;
  double keep_probability = 0.5;
  double kernel_width = 0.25;
  double ridge = 1e-3;
};
// Weighted ridge regression of f on binary word-presence vectors; returns
// the per-word coefficients.
std::vector<double> lime_scores(const Objective& f, const EmbeddedInput& input,
                                std::span<const double> baseline,
                                const LimeOptions& options, std::uint64_t seed);

// --- model-level entry points -----------------------------------------------
// Each resolves the output target on the unperturbed input (TopPrediction
// freezes the predicted class, Loss uses the gold label) and returns one
// score per non-special word.

AttributionVector saliency(const model::ModelParams& params,
                           const TokenizedPair& pair,
                           const AttributionConfig& config);
AttributionVector input_x_gradient(const model::ModelParams& params,
                                   const TokenizedPair& pair,
                                   const AttributionConfig& config);
AttributionVector guided_backprop(const model::ModelParams& params,
                                  const TokenizedPair& pair,
                                  const AttributionConfig& config);
AttributionVector integrated_gradients(const model::ModelParams& params,
                                       const TokenizedPair& pair,
                                       const AttributionConfig& config);
AttributionVector lime(const model::ModelParams& params,
                       const TokenizedPair& pair,
                       const AttributionConfig& config);
AttributionVector occlusion(const model::ModelParams& params,
                            const TokenizedPair& pair,
                            const AttributionConfig& config);
AttributionVector shapley_sampling(const model::ModelParams& params,
                                   const TokenizedPair& pair,
                                   const AttributionConfig& config);
AttributionVector layer_activation(const model::ModelParams& params,
                                   const TokenizedPair& pair,
                                   const AttributionConfig& config);

// Dispatches on config.method after validating the config.
AttributionVector attribute(const model::ModelParams& params,
                            const TokenizedPair& pair,
                            const AttributionConfig& config);

// attribute() over many instances, parallel across instances. Output order
// matches input order and does not depend on the thread count.
std::vector<AttributionVector> attribute_all(
    const model::ModelParams& params, std::span<const TokenizedPair> pairs,
    const AttributionConfig& config);

// The 13 method x aggregation rows compared throughout the evaluation.
struct GridRow {
  Method method;
  Aggregation aggregation;
};
const std::vector<GridRow>& evaluation_grid();
std::string grid_row_name(const GridRow& row);

}  // namespace xattr::attribution

#endif  // XATTR_ATTRIBUTION_ATTRIBUTION_H_
