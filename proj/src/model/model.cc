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

#include "xattr/model/model.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "xattr/core/util.h"
#include "model/internal.h"

namespace xattr::model {

Vocabulary::Vocabulary() {
  for (std::string_view token : {kPadToken, kUnkToken, kClsToken, kSepToken}) {
    add(token);
  }
}

Vocabulary Vocabulary::from_words(std::vector<std::string> words) {
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  Vocabulary vocabulary;
  for (const std::string& word : words) vocabulary.add(word);
  return vocabulary;
}

Vocabulary Vocabulary::from_pairs(std::span<const TokenizedPair> pairs) {
  std::vector<std::string> words;
  for (const TokenizedPair& pair : pairs) {
    words.insert(words.end(), pair.premise.begin(), pair.premise.end());
    words.insert(words.end(), pair.hypothesis.begin(), pair.hypothesis.end());
  }
  return from_words(std::move(words));
}

std::size_t Vocabulary::add(std::string_view word) {
  const std::string key(word);
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  const std::size_t index = words_.size();
  words_.push_back(key);
  index_.emplace(key, index);
  return index;
}

std::optional<std::size_t> Vocabulary::find(std::string_view word) const {
  if (auto it = index_.find(std::string(word)); it != index_.end()) {
    return it->second;
  }
  return std::nullopt;
}

std::size_t Vocabulary::index_of(std::string_view word) const {
  return find(word).value_or(kUnk);
}

void ModelParams::validate() const {
  const std::size_t d = dims.embedding;
  const std::size_t h = dims.hidden;
  if (d == 0 || h == 0) throw ModelError("model dimensions must be positive");
  if (embedding.rows != vocabulary.size() || embedding.cols != d ||
      w1.rows != h || w1.cols != 2 * d || b1.size() != h ||
      w2.rows != kNumClasses || w2.cols != h || b2.size() != kNumClasses ||
      embedding.data.size() != embedding.rows * embedding.cols ||
      w1.data.size() != h * 2 * d || w2.data.size() != kNumClasses * h) {
    throw ModelError("model parameter shapes are inconsistent");
  }
  auto finite = [](std::span<const double> values) {
    return std::all_of(values.begin(), values.end(),
                       [](double v) { return std::isfinite(v); });
  };
  if (!finite(embedding.data) || !finite(w1.data) || !finite(b1) ||
      !finite(w2.data) || !finite(b2)) {
    throw ModelError("model parameters contain non-finite values");
  }
}

ModelParams zero_params(Vocabulary vocabulary, ModelDims dims,
                        HiddenActivation activation) {
  ModelParams params;
  params.dims = dims;
  params.activation = activation;
  params.embedding = Matrix(vocabulary.size(), dims.embedding);
  params.w1 = Matrix(dims.hidden, 2 * dims.embedding);
  params.b1.assign(dims.hidden, 0.0);
  params.w2 = Matrix(kNumClasses, dims.hidden);
  params.b2.assign(kNumClasses, 0.0);
  params.vocabulary = std::move(vocabulary);
  return params;
}

ModelParams init_params(Vocabulary vocabulary, std::uint64_t seed,
                        ModelDims dims, HiddenActivation activation) {
  ModelParams params = zero_params(std::move(vocabulary), dims, activation);
  params.seed = seed;
  Rng rng(seed);
  for (double& v : params.embedding.data) v = 0.5 * rng.normal();
  const double limit1 = std::sqrt(6.0 / double(dims.hidden + 2 * dims.embedding));
  for (double& v : params.w1.data) v = rng.uniform(-limit1, limit1);
  const double limit2 = std::sqrt(6.0 / double(kNumClasses + dims.hidden));
  for (double& v : params.w2.data) v = rng.uniform(-limit2, limit2);
  return params;
}

EmbeddedInput embed(const ModelParams& params, const TokenizedPair& pair) {
  pair.validate();
  EmbeddedInput input;
  input.premise_words = pair.premise.size();
  input.rows.reserve(pair.num_words());
  for (std::size_t j = 0; j < pair.num_words(); ++j) {
    const auto row =
        params.embedding.row(params.vocabulary.index_of(pair.word(j)));
    input.rows.emplace_back(row.begin(), row.end());
  }
  return input;
}

ForwardTrace forward(const ModelParams& params, const EmbeddedInput& input) {
  const std::size_t d = params.embedding_dim();
  const std::size_t h = params.hidden_dim();
  const std::size_t n_premise = input.premise_words;
  const std::size_t n_hypothesis = input.hypothesis_words();
  if (n_premise == 0 || n_hypothesis == 0) {
    throw DataError("forward requires non-empty premise and hypothesis");
  }

  ForwardTrace trace;
  trace.pooled.assign(2 * d, 0.0);
  for (std::size_t j = 0; j < input.num_words(); ++j) {
    const bool in_premise = j < n_premise;
    const double scale = 1.0 / double(in_premise ? n_premise : n_hypothesis);
    const std::size_t offset = in_premise ? 0 : d;
    for (std::size_t k = 0; k < d; ++k) {
      trace.pooled[offset + k] += input.rows[j][k] * scale;
    }
  }

  trace.pre_activation.assign(h, 0.0);
  trace.hidden.assign(h, 0.0);
  for (std::size_t u = 0; u < h; ++u) {
    double z = params.b1[u];
    const auto weights = params.w1.row(u);
    for (std::size_t i = 0; i < 2 * d; ++i) z += weights[i] * trace.pooled[i];
    trace.pre_activation[u] = z;
    trace.hidden[u] =
        params.activation == HiddenActivation::kRelu ? std::max(z, 0.0) : z;
  }

  for (int c = 0; c < kNumClasses; ++c) {
    double logit = params.b2[c];
    const auto weights = params.w2.row(c);
    for (std::size_t u = 0; u < h; ++u) logit += weights[u] * trace.hidden[u];
    trace.logits[c] = logit;
  }
  trace.probabilities = internal::softmax(trace.logits);
  trace.predicted = static_cast<int>(
      std::max_element(trace.probabilities.begin(),
                       trace.probabilities.end()) -
      trace.probabilities.begin());
  trace.input = input;
  return trace;
}

ForwardTrace forward(const ModelParams& params, const TokenizedPair& pair) {
  return forward(params, embed(params, pair));
}

OutputTarget resolve_target(const ForwardTrace& trace,
                            OutputMechanism mechanism,
                            std::optional<Label> gold) {
  if (mechanism == OutputMechanism::kTopPrediction) {
    return {mechanism, trace.predicted};
  }
  if (!gold) throw std::invalid_argument("Loss output requires a gold label");
  return {mechanism, static_cast<int>(*gold)};
}

double objective_value(const ForwardTrace& trace, const OutputTarget& target) {
  if (target.mechanism == OutputMechanism::kTopPrediction) {
    return trace.probabilities[target.target_class];
  }
  return internal::log_sum_exp(trace.logits) -
         trace.logits[target.target_class];
}

double output_value(const ForwardTrace& trace, OutputMechanism mechanism,
                    std::optional<Label> gold) {
  return objective_value(trace, resolve_target(trace, mechanism, gold));
}

namespace internal {

std::array<double, kNumClasses> softmax(
    const std::array<double, kNumClasses>& logits) {
  const double shift = *std::max_element(logits.begin(), logits.end());
  std::array<double, kNumClasses> out{};
  double total = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    out[c] = std::exp(logits[c] - shift);
    total += out[c];
  }
  for (double& p : out) p /= total;
  return out;
}

double log_sum_exp(const std::array<double, kNumClasses>& logits) {
  const double shift = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double l : logits) total += std::exp(l - shift);
  return shift + std::log(total);
}

std::array<double, kNumClasses> logit_gradient(const ForwardTrace& trace,
                                               const OutputTarget& target) {
  std::array<double, kNumClasses> grad{};
  const auto& p = trace.probabilities;
  const int c = target.target_class;
  for (int i = 0; i < kNumClasses; ++i) {
    const double delta = i == c ? 1.0 : 0.0;
    grad[i] = target.mechanism == OutputMechanism::kTopPrediction
                  ? p[c] * (delta - p[i])
                  : p[i] - delta;
  }
  return grad;
}

std::vector<double> pre_activation_gradient(
    const ModelParams& params, const ForwardTrace& trace,
    const std::array<double, kNumClasses>& logit_grad, GradientMode mode) {
  const std::size_t h = params.hidden_dim();
  std::vector<double> grad(h, 0.0);
  for (std::size_t u = 0; u < h; ++u) {
    double g = 0.0;
    for (int c = 0; c < kNumClasses; ++c) g += params.w2.at(c, u) * logit_grad[c];
    if (params.activation == HiddenActivation::kRelu) {
      // Guided mode also blocks negative gradients at every ReLU.
      const bool open = trace.pre_activation[u] > 0.0 &&
                        (mode == GradientMode::kPlain || g > 0.0);
      g = open ? g : 0.0;
    }
    grad[u] = g;
  }
  return grad;
}

std::vector<double> pooled_gradient(const ModelParams& params,
                                    std::span<const double> pre_grad) {
  const std::size_t width = 2 * params.embedding_dim();
  std::vector<double> grad(width, 0.0);
  for (std::size_t u = 0; u < pre_grad.size(); ++u) {
    if (pre_grad[u] == 0.0) continue;
    const auto weights = params.w1.row(u);
    for (std::size_t i = 0; i < width; ++i) grad[i] += weights[i] * pre_grad[u];
  }
  return grad;
}

}  // namespace internal

EmbeddingGradient gradient_at(const ModelParams& params,
                              const EmbeddedInput& input,
                              const OutputTarget& target, GradientMode mode) {
  const ForwardTrace trace = forward(params, input);
  const auto logit_grad = internal::logit_gradient(trace, target);
  const auto pre_grad =
      internal::pre_activation_gradient(params, trace, logit_grad, mode);
  const auto pooled_grad = internal::pooled_gradient(params, pre_grad);

  const std::size_t d = params.embedding_dim();
  const std::size_t n_premise = input.premise_words;
  const std::size_t n_hypothesis = input.hypothesis_words();
  EmbeddingGradient grad(input.num_words(), std::vector<double>(d, 0.0));
  for (std::size_t j = 0; j < input.num_words(); ++j) {
    const bool in_premise = j < n_premise;
    const double scale = 1.0 / double(in_premise ? n_premise : n_hypothesis);
    const std::size_t offset = in_premise ? 0 : d;
    for (std::size_t k = 0; k < d; ++k) {
      const double g = pooled_grad[offset + k] * scale;
      if (!std::isfinite(g)) {
        throw ModelError("non-finite gradient; parameters may have diverged");
      }
      grad[j][k] = g;
    }
  }
  return grad;
}

EmbeddingGradient grad_wrt_embeddings(const ModelParams& params,
                                      const TokenizedPair& pair,
                                      OutputMechanism mechanism,
                                      std::optional<Label> gold,
                                      GradientMode mode) {
  const EmbeddedInput input = embed(params, pair);
  const ForwardTrace trace = forward(params, input);
  return gradient_at(params, input, resolve_target(trace, mechanism, gold),
                     mode);
}

}  // namespace xattr::model
