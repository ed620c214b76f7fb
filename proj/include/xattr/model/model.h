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

// A small word-level 3-class NLI classifier with exact reverse-mode
// gradients with respect to its input word embeddings.
//
//   premise vector    = mean of premise word embeddings        (d)
//   hypothesis vector = mean of hypothesis word embeddings     (d)
//   hidden            = act(W1 [premise; hypothesis] + b1)     (h)
//   logits            = W2 hidden + b2                         (3)
//   probabilities     = softmax(logits)
//
// act is ReLU by default. The identity activation yields a ReLU-free model,
// on which guided and plain gradients coincide.

#ifndef XATTR_MODEL_MODEL_H_
#define XATTR_MODEL_MODEL_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xattr/core/types.h"

namespace xattr::model {

// Numerical failure inside the model (non-finite loss or gradient).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";

class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kCls = 2;
  static constexpr std::size_t kSep = 3;

  // Reserved tokens only.
  Vocabulary();
  // Reserved tokens followed by the given words, sorted and deduplicated.
  static Vocabulary from_words(std::vector<std::string> words);
  static Vocabulary from_pairs(std::span<const TokenizedPair> pairs);

  std::size_t add(std::string_view word);
  std::optional<std::size_t> find(std::string_view word) const;
  // Unknown words map to the UNK row.
  std::size_t index_of(std::string_view word) const;
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.words_ == b.words_;
  }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) {
    return std::span<double>(data).subspan(r * cols, cols);
  }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data).subspan(r * cols, cols);
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

enum class HiddenActivation { kRelu, kIdentity };
enum class GradientMode { kPlain, kGuided };

struct ModelDims {
  std::size_t embedding = 16;
  std::size_t hidden = 32;
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

struct ModelParams {
  Vocabulary vocabulary;
  ModelDims dims;
  HiddenActivation activation = HiddenActivation::kRelu;
  std::uint64_t seed = 0;
  Matrix embedding;          // |V| x d
  Matrix w1;                 // h x 2d
  std::vector<double> b1;    // h
  Matrix w2;                 // 3 x h
  std::vector<double> b2;    // 3

  std::size_t embedding_dim() const { return dims.embedding; }
  std::size_t hidden_dim() const { return dims.hidden; }
  std::span<const double> pad_embedding() const {
    return embedding.row(Vocabulary::kPad);
  }
  // Throws ModelError on shape mismatch or non-finite parameters.
  void validate() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// All-zero parameters with the given shapes.
ModelParams zero_params(Vocabulary vocabulary, ModelDims dims = {},
                        HiddenActivation activation = HiddenActivation::kRelu);
// Seeded random initialization (Gaussian embeddings, Xavier-uniform layers).
ModelParams init_params(Vocabulary vocabulary, std::uint64_t seed,
                        ModelDims dims = {},
                        HiddenActivation activation = HiddenActivation::kRelu);

// Per-word embedding rows, indexed by non-special word position.
struct EmbeddedInput {
  std::size_t premise_words = 0;
  std::vector<std::vector<double>> rows;

  std::size_t num_words() const { return rows.size(); }
  std::size_t hypothesis_words() const { return rows.size() - premise_words; }
};

// Per-word gradient rows, same layout as EmbeddedInput::rows.
using EmbeddingGradient = std::vector<std::vector<double>>;

EmbeddedInput embed(const ModelParams& params, const TokenizedPair& pair);

struct ForwardTrace {
  EmbeddedInput input;
  std::vector<double> pooled;          // 2d: premise mean then hypothesis mean
  std::vector<double> pre_activation;  // h
  std::vector<double> hidden;          // h
  std::array<double, kNumClasses> logits{};
  std::array<double, kNumClasses> probabilities{};
  int predicted = 0;  // argmax, lowest index on ties
};

ForwardTrace forward(const ModelParams& params, const TokenizedPair& pair);
ForwardTrace forward(const ModelParams& params, const EmbeddedInput& input);

// Scalar the attribution methods explain: probability of a fixed class
// (TopPrediction) or cross-entropy against a fixed class (Loss).
struct OutputTarget {
  OutputMechanism mechanism = OutputMechanism::kTopPrediction;
  int target_class = 0;
};

// TopPrediction freezes the predicted class of `trace`; Loss needs gold.
OutputTarget resolve_target(const ForwardTrace& trace,
                            OutputMechanism mechanism,
                            std::optional<Label> gold);
double objective_value(const ForwardTrace& trace, const OutputTarget& target);

// max probability for TopPrediction, -log p(gold) for Loss.
double output_value(const ForwardTrace& trace, OutputMechanism mechanism,
                    std::optional<Label> gold = std::nullopt);

// Gradient of objective_value with respect to each word embedding, for an
// already-embedded (possibly perturbed) input.
EmbeddingGradient gradient_at(const ModelParams& params,
                              const EmbeddedInput& input,
                              const OutputTarget& target, GradientMode mode);

EmbeddingGradient grad_wrt_embeddings(const ModelParams& params,
                                      const TokenizedPair& pair,
                                      OutputMechanism mechanism,
                                      std::optional<Label> gold,
                                      GradientMode mode);

}  // namespace xattr::model

#endif  // XATTR_MODEL_MODEL_H_
