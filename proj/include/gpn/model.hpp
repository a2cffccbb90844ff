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

#include <cstdint>
#include <vector>

#include "gpn/encoder.hpp"
#include "gpn/graph.hpp"
#include "gpn/valuator.hpp"

namespace gpn {

enum class Precision { kF32, kF64 };

// All trainable tensors: encoder (theta) and valuator (phi).
template <typename Real>
struct ModelParams {
  EncoderParams<Real> encoder;
  ValuatorParams<Real> valuator;

  static ModelParams init(std::size_t feature_dim, std::uint64_t seed);

  std::size_t feature_dim() const { return encoder.feature_dim(); }
  // Fixed order: encoder.w0, b0, w1, b1, valuator.w_s, b_s, a1, a2.
  std::vector<Parameter<Real>*> all();
  std::vector<const Parameter<Real>*> all() const;
  void zero_grad();

  template <typename Other>
  ModelParams<Other> cast() const {
    ModelParams<Other> out;
    auto dst = out.all();
    auto src = all();
    for (std::size_t i = 0; i < src.size(); ++i) {
      *dst[i] = Parameter<Other>(src[i]->name, src[i]->value.template cast<Other>());
    }
    return out;
  }
};

// Per-graph quantities shared by every episode: propagation matrix (also the
// valuator neighbourhood pattern), features at working precision, centrality.
template <typename Real>
struct GraphContext {
  const AttributedGraph* graph = nullptr;
  SparseMatrix norm_adj;
  Matrix<Real> features;
  std::vector<double> centrality;

  static GraphContext build(const AttributedGraph& g, double centrality_eps);
};

}  // namespace gpn
