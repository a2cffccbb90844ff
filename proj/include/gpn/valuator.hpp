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

#include <span>
#include <vector>

#include "gpn/autodiff.hpp"
#include "gpn/graph.hpp"

namespace gpn {

// Negative slope of the attention LeakyReLU.
inline constexpr double kAttentionSlope = 0.2;
inline constexpr double kDefaultCentralityEps = 1e-6;

// Scoring layer (w_s, b_s) and two score-aggregation layers (a1, a2). The
// attention vectors are 2-dimensional because they act on a concatenated
// pair of scalar scores.
template <typename Real>
struct ValuatorParams {
  Parameter<Real> w_s;
  Parameter<Real> b_s;
  Parameter<Real> a1;
  Parameter<Real> a2;

  static ValuatorParams init(std::size_t feature_dim, Rng& rng);
};

struct ValuatorVars {
  Var w_s, b_s, a1, a2;
};

template <typename Real>
ValuatorVars bind(Tape<Real>& t, ValuatorParams<Real>& p, bool trainable);

// s0_i = tanh(w_s . x_i + b_s); n x 1.
template <typename Real>
Var initial_scores(Tape<Real>& t, Var features, Var w_s, Var b_s);

// One attention-weighted aggregation over N(i) + {i}. `neighborhood` is any
// CSR whose row i lists N(i) and i itself (the normalized adjacency works).
// Logit for (i, j) is LeakyReLU(a0 * s_i + a1 * s_j); the anchor node's score
// comes first in both numerator and denominator. When `attention` is
// non-null it receives one weight per stored entry of `neighborhood`.
template <typename Real>
Var score_aggregate(Tape<Real>& t, const SparseMatrix& neighborhood, Var scores, Var attn,
                    std::vector<Real>* attention = nullptr);

// sigmoid(C(i) * s_i) with the graph centrality held constant.
template <typename Real>
Var final_scores(Tape<Real>& t, Var last_scores, std::span<const double> centrality);

// Full valuator: scoring layer, two aggregation layers, centrality adjustment.
template <typename Real>
Var valuate(Tape<Real>& t, const SparseMatrix& neighborhood, std::span<const double> centrality,
            Var features, const ValuatorVars& p);

}  // namespace gpn
