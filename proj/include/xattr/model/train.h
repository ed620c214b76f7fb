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

#ifndef XATTR_MODEL_TRAIN_H_
#define XATTR_MODEL_TRAIN_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "xattr/model/model.h"

namespace xattr::model {

inline constexpr std::size_t kDefaultBatchSize = 16;

struct TrainResult {
  ModelParams params;
  double train_accuracy = 0.0;
  std::vector<double> epoch_loss;  // mean cross-entropy per epoch
};

// Mini-batch SGD on cross-entropy. Single-threaded and deterministic given
// the seed, which only drives the per-epoch shuffle.
TrainResult train(ModelParams params, std::span<const TokenizedPair> dataset,
                  int epochs, double lr, std::uint64_t seed,
                  std::size_t batch_size = kDefaultBatchSize);

double accuracy(const ModelParams& params,
                std::span<const TokenizedPair> dataset);

// Checkpoint: one JSON object with dims, activation, seed, vocabulary and
// row-major parameter arrays.
std::string format_checkpoint(const ModelParams& params);
ModelParams parse_checkpoint(const std::string& text);
void save_checkpoint(const ModelParams& params,
                     const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace xattr::model

#endif  // XATTR_MODEL_TRAIN_H_
