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

// Backward-pass pieces shared by input attribution and training.

#ifndef XATTR_SRC_MODEL_INTERNAL_H_
#define XATTR_SRC_MODEL_INTERNAL_H_

#include <array>
#include <span>
#include <vector>

#include "xattr/model/model.h"

namespace xattr::model::internal {

std::array<double, kNumClasses> softmax(
    const std::array<double, kNumClasses>& logits);
double log_sum_exp(const std::array<double, kNumClasses>& logits);

// d objective / d logits.
std::array<double, kNumClasses> logit_gradient(const ForwardTrace& trace,
                                               const OutputTarget& target);

// d objective / d pre-activation, applying the ReLU backward rule of `mode`.
std::vector<double> pre_activation_gradient(
    const ModelParams& params, const ForwardTrace& trace,
    const std::array<double, kNumClasses>& logit_grad, GradientMode mode);

// d objective / d pooled input (2d).
std::vector<double> pooled_gradient(const ModelParams& params,
                                    std::span<const double> pre_grad);

}  // namespace xattr::model::internal

#endif  // XATTR_SRC_MODEL_INTERNAL_H_
