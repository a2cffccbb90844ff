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

#include "gpn/autodiff.hpp"
#include "gpn/graph.hpp"

namespace gpn {

inline constexpr std::size_t kHiddenDim = 32;
inline constexpr std::size_t kEmbeddingDim = 16;

// Two GCN layers: feature_dim -> 32 -> 16.
template <typename Real>
struct EncoderParams {
  Parameter<Real> w0;
  Parameter<Real> b0;
  Parameter<Real> w1;
  Parameter<Real> b1;

  static EncoderParams init(std::size_t feature_dim, Rng& rng);
  std::size_t feature_dim() const { return w0.value.rows(); }
};

// Parameter handles on a particular tape.
struct EncoderVars {
  Var w0, b0, w1, b1;
};

// Trainable binding accumulates gradients into the parameters; otherwise
// the values are recorded as constants.
template <typename Real>
EncoderVars bind(Tape<Real>& t, EncoderParams<Real>& p, bool trainable);

// Z = ReLU(A_hat ReLU(A_hat drop(X) W0 + b0) W1 + b1), dropout on each layer
// input in training mode. Every node is encoded.
template <typename Real>
Var encode(Tape<Real>& t, const SparseMatrix& norm_adj, Var features, const EncoderVars& p,
           double dropout_rate, bool training, Rng& rng);

// Eval-mode convenience wrapper.
template <typename Real>
Matrix<Real> encode(const SparseMatrix& norm_adj, const Matrix<Real>& features,
                    const EncoderParams<Real>& p);

}  // namespace gpn
