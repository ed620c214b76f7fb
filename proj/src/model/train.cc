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

#include "xattr/model/train.h"

#include <cmath>
#include <map>
#include <string>
#include <utility>

#include "json.hpp"
#include "xattr/core/io.h"
#include "xattr/core/util.h"
#include "model/internal.h"

namespace xattr::model {
namespace {

using Json = nlohmann::ordered_json;

struct Gradients {
  std::map<std::size_t, std::vector<double>> embedding;  // sparse rows
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;

  explicit Gradients(const ModelParams& params)
      : w1(params.w1.rows, params.w1.cols),
        b1(params.b1.size(), 0.0),
        w2(params.w2.rows, params.w2.cols),
        b2(params.b2.size(), 0.0) {}
};

// Accumulates the cross-entropy gradient of one example; returns its loss.
double accumulate(const ModelParams& params, const TokenizedPair& pair,
                  Gradients& grads) {
  const std::size_t d = params.embedding_dim();
  const std::size_t h = params.hidden_dim();
  const ForwardTrace trace = forward(params, pair);
  const OutputTarget target{OutputMechanism::kLoss,
                            static_cast<int>(pair.label)};
  const double loss = objective_value(trace, target);
  if (!std::isfinite(loss)) {
    throw ModelError("non-finite loss on instance '" + pair.id + "'");
  }

  const auto logit_grad = internal::logit_gradient(trace, target);
  for (int c = 0; c < kNumClasses; ++c) {
    grads.b2[c] += logit_grad[c];
    for (std::size_t u = 0; u < h; ++u) {
      grads.w2.at(c, u) += logit_grad[c] * trace.hidden[u];
    }
  }
  const auto pre_grad = internal::pre_activation_gradient(
      params, trace, logit_grad, GradientMode::kPlain);
  for (std::size_t u = 0; u < h; ++u) {
    grads.b1[u] += pre_grad[u];
    if (pre_grad[u] == 0.0) continue;
    for (std::size_t i = 0; i < 2 * d; ++i) {
      grads.w1.at(u, i) += pre_grad[u] * trace.pooled[i];
    }
  }
  const auto pooled_grad = internal::pooled_gradient(params, pre_grad);
  const std::size_t n_premise = pair.premise.size();
  for (std::size_t j = 0; j < pair.num_words(); ++j) {
    const bool in_premise = j < n_premise;
    const double scale =
        1.0 / double(in_premise ? n_premise : pair.hypothesis.size());
    const std::size_t offset = in_premise ? 0 : d;
    auto& row = grads.embedding[params.vocabulary.index_of(pair.word(j))];
    row.resize(d, 0.0);
    for (std::size_t k = 0; k < d; ++k) row[k] += pooled_grad[offset + k] * scale;
  }
  return loss;
}

void apply(ModelParams& params, const Gradients& grads, double step) {
  for (const auto& [index, row] : grads.embedding) {
    auto target = params.embedding.row(index);
    for (std::size_t k = 0; k < row.size(); ++k) target[k] -= step * row[k];
  }
  for (std::size_t i = 0; i < params.w1.data.size(); ++i) {
    params.w1.data[i] -= step * grads.w1.data[i];
  }
  for (std::size_t i = 0; i < params.b1.size(); ++i) {
    params.b1[i] -= step * grads.b1[i];
  }
  for (std::size_t i = 0; i < params.w2.data.size(); ++i) {
    params.w2.data[i] -= step * grads.w2.data[i];
  }
  for (std::size_t i = 0; i < params.b2.size(); ++i) {
    params.b2[i] -= step * grads.b2[i];
  }
}

std::string activation_name(HiddenActivation activation) {
  return activation == HiddenActivation::kRelu ? "relu" : "identity";
}

HiddenActivation parse_activation(const std::string& name) {
  if (name == "relu") return HiddenActivation::kRelu;
  if (name == "identity") return HiddenActivation::kIdentity;
  throw DataError("unknown activation '" + name + "'");
}

}  // namespace

TrainResult train(ModelParams params, std::span<const TokenizedPair> dataset,
                  int epochs, double lr, std::uint64_t seed,
                  std::size_t batch_size) {
  if (dataset.empty()) throw DataError("training dataset is empty");
  if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
  params.validate();

  TrainResult result;
  Rng rng(seed);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const std::vector<std::size_t> order = rng.permutation(dataset.size());
    std::vector<double> losses;
    losses.reserve(dataset.size());
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      Gradients grads(params);
      for (std::size_t i = start; i < end; ++i) {
        losses.push_back(accumulate(params, dataset[order[i]], grads));
      }
      apply(params, grads, lr / double(end - start));
    }
    const double mean_loss = pairwise_mean(losses);
    if (!std::isfinite(mean_loss)) {
      throw ModelError("training diverged at epoch " + std::to_string(epoch));
    }
    result.epoch_loss.push_back(mean_loss);
  }
  params.validate();
  result.train_accuracy = accuracy(params, dataset);
  result.params = std::move(params);
  return result;
}

double accuracy(const ModelParams& params,
                std::span<const TokenizedPair> dataset) {
  if (dataset.empty()) return 0.0;
  std::size_t correct = 0;
  for (const TokenizedPair& pair : dataset) {
    if (forward(params, pair).predicted == static_cast<int>(pair.label)) {
      ++correct;
    }
  }
  return double(correct) / double(dataset.size());
}

std::string format_checkpoint(const ModelParams& params) {
  params.validate();
  Json object;
  object["format"] = "xattr-minimodel-v1";
  object["dims"] = {{"embedding", params.dims.embedding},
                    {"hidden", params.dims.hidden},
                    {"classes", kNumClasses}};
  object["activation"] = activation_name(params.activation);
  object["seed"] = params.seed;
  object["vocabulary"] = params.vocabulary.words();
  object["embedding"] = params.embedding.data;
  object["w1"] = params.w1.data;
  object["b1"] = params.b1;
  object["w2"] = params.w2.data;
  object["b2"] = params.b2;
  return object.dump() + "\n";
}

ModelParams parse_checkpoint(const std::string& text) {
  ModelParams params;
  try {
    const Json object = Json::parse(text);
    params.dims.embedding = object.at("dims").at("embedding").get<std::size_t>();
    params.dims.hidden = object.at("dims").at("hidden").get<std::size_t>();
    if (object.at("dims").at("classes").get<int>() != kNumClasses) {
      throw DataError("checkpoint must have 3 classes");
    }
    params.activation =
        parse_activation(object.at("activation").get<std::string>());
    params.seed = object.at("seed").get<std::uint64_t>();
    const auto words = object.at("vocabulary").get<std::vector<std::string>>();
    Vocabulary vocabulary;
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (vocabulary.add(words[i]) != i) {
        throw DataError("checkpoint vocabulary must start with reserved "
                        "tokens and contain no duplicates");
      }
    }
    params.vocabulary = std::move(vocabulary);
    const std::size_t d = params.dims.embedding;
    const std::size_t h = params.dims.hidden;
    params.embedding = Matrix(params.vocabulary.size(), d);
    params.embedding.data = object.at("embedding").get<std::vector<double>>();
    params.w1 = Matrix(h, 2 * d);
    params.w1.data = object.at("w1").get<std::vector<double>>();
    params.b1 = object.at("b1").get<std::vector<double>>();
    params.w2 = Matrix(kNumClasses, h);
    params.w2.data = object.at("w2").get<std::vector<double>>();
    params.b2 = object.at("b2").get<std::vector<double>>();
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
  try {
    params.validate();
  } catch (const ModelError& e) {
    throw DataError(std::string("invalid checkpoint: ") + e.what());
  }
  return params;
}

void save_checkpoint(const ModelParams& params,
                     const std::filesystem::path& path) {
  write_file_atomic(path, format_checkpoint(params));
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path));
}

}  // namespace xattr::model
