// Copyright 2026 The GPN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gpn/autodiff.hpp"

namespace gpn {

// kWeighted: importance-weighted prototypes (GPN). kMean: plain average
// (GPN-naive; vanilla prototypical networks).
enum class PrototypeStrategy { kWeighted, kMean };

std::string_view strategy_name(PrototypeStrategy s);
// Accepts "gpn" and "gpn-naive"; throws std::invalid_argument otherwise.
PrototypeStrategy parse_strategy(std::string_view name);

// Row ids of the support set grouped by episode class.
using SupportGroups = std::vector<std::vector<std::size_t>>;

// beta_i = softmax of the adjusted scores within each class. `scores` is a
// column over the support rows.
template <typename Real>
Var support_weights(Tape<Real>& t, Var scores, const SupportGroups& groups);

// One prototype row per group. Weighted requires `weights`; mean rejects them.
template <typename Real>
Var prototypes(Tape<Real>& t, Var support_embeddings, std::optional<Var> weights,
               const SupportGroups& groups, PrototypeStrategy strategy);

// Logits -||z - p_c||^2 for every (query, class) pair.
template <typename Real>
Var class_logits(Tape<Real>& t, Var query_embeddings, Var protos);

// Mean negative log-likelihood of `labels` (episode-local class indices).
template <typename Real>
Var episode_loss(Tape<Real>& t, Var logits, std::span<const std::size_t> labels,
                 Matrix<Real>* probs = nullptr);

// Eager forms.

template <typename Real>
std::vector<Real> support_weights(std::span<const Real> scores, const SupportGroups& groups);

template <typename Real>
Matrix<Real> prototypes(const Matrix<Real>& support_embeddings, std::span<const Real> weights,
                        const SupportGroups& groups, PrototypeStrategy strategy);

// Softmax over -squared distance to each prototype.
template <typename Real>
std::vector<Real> classify(std::span<const Real> query, const Matrix<Real>& protos);

// Probabilities are clamped at 1e-30 before the log.
template <typename Real>
double episode_loss(const Matrix<Real>& probs, std::span<const std::size_t> labels);

// Row-wise argmax; ties go to the lowest class index.
template <typename Real>
std::vector<std::size_t> predict(const Matrix<Real>& probs);

}  // namespace gpn
