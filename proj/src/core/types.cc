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

#include "xattr/core/types.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <utility>

namespace xattr {
namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

template <typename E, std::size_t N>
E lookup(std::string_view text,
         const std::array<std::pair<std::string_view, E>, N>& table,
         std::string_view what) {
  const std::string key = lower(text);
  for (const auto& [name, value] : table) {
    if (key == name) return value;
  }
  throw DataError("unknown " + std::string(what) + " '" + std::string(text) +
                  "'");
}

}  // namespace

std::string_view to_string(Label label) {
  switch (label) {
    case Label::kEntailment:
      return "entailment";
    case Label::kNeutral:
      return "neutral";
    case Label::kContradiction:
      return "contradiction";
  }
  return "?";
}

Label parse_label(std::string_view text) {
  if (text == "entailment") return Label::kEntailment;
  if (text == "neutral") return Label::kNeutral;
  if (text == "contradiction") return Label::kContradiction;
  throw DataError("unknown label '" + std::string(text) + "'");
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kSaliency:
      return "Saliency";
    case Method::kInputXGradient:
      return "InputXGradient";
    case Method::kGuidedBackprop:
      return "GuidedBackprop";
    case Method::kIntegratedGradients:
      return "IntegratedGradients";
    case Method::kLime:
      return "LIME";
    case Method::kOcclusion:
      return "Occlusion";
    case Method::kShapleySampling:
      return "ShapleySampling";
    case Method::kActivation:
      return "Activation";
  }
  return "?";
}

std::string_view to_string(OutputMechanism output) {
  return output == OutputMechanism::kTopPrediction ? "TopPrediction" : "Loss";
}

std::string_view to_string(Aggregation aggregation) {
  switch (aggregation) {
    case Aggregation::kMean:
      return "Mean";
    case Aggregation::kL2:
      return "L2";
    case Aggregation::kNone:
      return "None";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  static constexpr std::array<std::pair<std::string_view, Method>, 17> kTable{{
      {"saliency", Method::kSaliency},
      {"inputxgradient", Method::kInputXGradient},
      {"ixg", Method::kInputXGradient},
      {"guidedbackprop", Method::kGuidedBackprop},
      {"gbp", Method::kGuidedBackprop},
      {"integratedgradients", Method::kIntegratedGradients},
      {"ig", Method::kIntegratedGradients},
      {"lime", Method::kLime},
      {"occlusion", Method::kOcclusion},
      {"shapleysampling", Method::kShapleySampling},
      {"shapley", Method::kShapleySampling},
      {"activation", Method::kActivation},
      {"input_x_gradient", Method::kInputXGradient},
      {"guided_backprop", Method::kGuidedBackprop},
      {"integrated_gradients", Method::kIntegratedGradients},
      {"shapley_sampling", Method::kShapleySampling},
      {"layer_activation", Method::kActivation},
  }};
  return lookup(text, kTable, "method");
}

OutputMechanism parse_output(std::string_view text) {
  static constexpr std::array<std::pair<std::string_view, OutputMechanism>, 3>
      kTable{{{"tp", OutputMechanism::kTopPrediction},
              {"topprediction", OutputMechanism::kTopPrediction},
              {"loss", OutputMechanism::kLoss}}};
  return lookup(text, kTable, "output mechanism");
}

Aggregation parse_aggregation(std::string_view text) {
  static constexpr std::array<std::pair<std::string_view, Aggregation>, 3>
      kTable{{{"mean", Aggregation::kMean},
              {"l2", Aggregation::kL2},
              {"none", Aggregation::kNone}}};
  return lookup(text, kTable, "aggregation");
}

bool is_word_level(Method method) {
  return method == Method::kLime || method == Method::kOcclusion ||
         method == Method::kShapleySampling;
}

std::vector<bool> TokenizedPair::special_mask() const {
  std::vector<bool> mask(input_length(), false);
  mask[0] = true;
  mask[premise.size() + 1] = true;
  mask.back() = true;
  return mask;
}

const std::string& TokenizedPair::word(std::size_t position) const {
  if (position < premise.size()) return premise[position];
  return hypothesis.at(position - premise.size());
}

void TokenizedPair::validate() const {
  if (premise.empty()) throw DataError("instance '" + id + "': empty premise");
  if (hypothesis.empty()) {
    throw DataError("instance '" + id + "': empty hypothesis");
  }
}

std::size_t HighlightMask::count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

void AlignmentSet::check_bounds(std::size_t source_words,
                                std::size_t target_words) const {
  for (const AlignmentLink& link : pairs) {
    if (link.source >= source_words || link.target >= target_words) {
      throw DataError("alignment " + std::to_string(link.source) + "-" +
                      std::to_string(link.target) + " out of range for '" +
                      instance_id + "' (" + std::to_string(source_words) +
                      " source words, " + std::to_string(target_words) +
                      " target words)");
    }
  }
}

}  // namespace xattr
