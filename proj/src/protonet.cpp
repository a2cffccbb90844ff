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

#include "gpn/protonet.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gpn {

std::string_view strategy_name(PrototypeStrategy s) {
  return s == PrototypeStrategy::kWeighted ? "gpn" : "gpn-naive";
}

PrototypeStrategy parse_strategy(std::string_view name) {
  if (name == "gpn") return PrototypeStrategy::kWeighted;
  if (name == "gpn-naive") return PrototypeStrategy::kMean;
  throw std::invalid_argument("unknown prototype strategy '" + std::string(name) +
                              "' (expected gpn or gpn-naive)");
}

template <typename Real>
Var support_weights(Tape<Real>& t, Var scores, const SupportGroups& groups) {
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument("support_weights: class with empty support set");
  }
  return group_softmax(t, scores, groups);
}

template <typename Real>
Var prototypes(Tape<Real>& t, Var support_embeddings, std::optional<Var> weights,
               const SupportGroups& groups, PrototypeStrategy strategy) {
  if (strategy == PrototypeStrategy::kWeighted && !weights) {
    throw std::invalid_argument("prototypes: weighted strategy requires support weights");
  }
  if (strategy == PrototypeStrategy::kMean && weights) {
    throw std::invalid_argument("prototypes: mean strategy does not take support weights");
  }
  if (strategy == PrototypeStrategy::kWeighted) {
    return group_weighted_sum(t, support_embeddings, *weights, groups);
  }
  Matrix<Real> uniform(t.value(support_embeddings).rows(), 1);
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument("prototypes: class with empty support set");
    for (std::size_t i : g) uniform(i, 0) = Real(1) / static_cast<Real>(g.size());
  }
  return group_weighted_sum(t, support_embeddings, t.constant(std::move(uniform)), groups);
}

template <typename Real>
Var class_logits(Tape<Real>& t, Var query_embeddings, Var protos) {
  if (t.value(protos).rows() == 0) throw std::invalid_argument("classify: empty prototype set");
  return scale(t, pairwise_sq_euclid(t, query_embeddings, protos), Real(-1));
}

template <typename Real>
Var episode_loss(Tape<Real>& t, Var logits, std::span<const std::size_t> labels,
                 Matrix<Real>* probs) {
  return softmax_nll(t, logits, labels, probs);
}

template <typename Real>
std::vector<Real> support_weights(std::span<const Real> scores, const SupportGroups& groups) {
  Tape<Real> t;
  Matrix<Real> col(scores.size(), 1, std::vector<Real>(scores.begin(), scores.end()));
  const auto& out = t.value(support_weights(t, t.constant(std::move(col)), groups));
  return out.data();
}

template <typename Real>
Matrix<Real> prototypes(const Matrix<Real>& support_embeddings, std::span<const Real> weights,
                        const SupportGroups& groups, PrototypeStrategy strategy) {
  Tape<Real> t;
  std::optional<Var> w;
  if (!weights.empty()) {
    w = t.constant(Matrix<Real>(weights.size(), 1, std::vector<Real>(weights.begin(), weights.end())));
  }
  return t.value(prototypes(t, t.constant(support_embeddings), w, groups, strategy));
}

template <typename Real>
std::vector<Real> classify(std::span<const Real> query, const Matrix<Real>& protos) {
  if (protos.rows() == 0) throw std::invalid_argument("classify: empty prototype set");
  std::vector<Real> d = sq_euclid(query, protos);
  for (Real& v : d) v = -v;
  std::vector<std::size_t> all(d.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return masked_softmax<Real>(d, all);
}

template <typename Real>
double episode_loss(const Matrix<Real>& probs, std::span<const std::size_t> labels) {
  if (labels.size() != probs.rows() || labels.empty()) {
    throw std::invalid_argument("episode_loss: need one label per probability row");
  }
  double total = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= probs.cols()) throw std::invalid_argument("episode_loss: label out of range");
    total -= std::log(std::max(static_cast<double>(probs(i, labels[i])), 1e-30));
  }
  return total / static_cast<double>(labels.size());
}

template <typename Real>
std::vector<std::size_t> predict(const Matrix<Real>& probs) {
  std::vector<std::size_t> out(probs.rows(), 0);
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    for (std::size_t c = 1; c < probs.cols(); ++c) {
      if (probs(i, c) > probs(i, out[i])) out[i] = c;
    }
  }
  return out;
}

#define GPN_INSTANTIATE_PROTONET(R)                                                          \
  template Var support_weights<R>(Tape<R>&, Var, const SupportGroups&);                      \
  template Var prototypes<R>(Tape<R>&, Var, std::optional<Var>, const SupportGroups&,        \
                             PrototypeStrategy);                                             \
  template Var class_logits<R>(Tape<R>&, Var, Var);                                          \
  template Var episode_loss<R>(Tape<R>&, Var, std::span<const std::size_t>, Matrix<R>*);     \
  template std::vector<R> support_weights<R>(std::span<const R>, const SupportGroups&);      \
  template Matrix<R> prototypes<R>(const Matrix<R>&, std::span<const R>, const SupportGroups&, \
                                   PrototypeStrategy);                                       \
  template std::vector<R> classify<R>(std::span<const R>, const Matrix<R>&);                 \
  template double episode_loss<R>(const Matrix<R>&, std::span<const std::size_t>);           \
  template std::vector<std::size_t> predict<R>(const Matrix<R>&);

GPN_INSTANTIATE_PROTONET(float)
GPN_INSTANTIATE_PROTONET(double)

#undef GPN_INSTANTIATE_PROTONET

}  // namespace gpn
