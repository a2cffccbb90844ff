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

#include "gpn/model.hpp"

namespace gpn {

template <typename Real>
ModelParams<Real> ModelParams<Real>::init(std::size_t feature_dim, std::uint64_t seed) {
  Rng rng(seed);
  ModelParams p;
  p.encoder = EncoderParams<Real>::init(feature_dim, rng);
  p.valuator = ValuatorParams<Real>::init(feature_dim, rng);
  return p;
}

template <typename Real>
std::vector<Parameter<Real>*> ModelParams<Real>::all() {
  return {&encoder.w0,   &encoder.b0,   &encoder.w1, &encoder.b1,
          &valuator.w_s, &valuator.b_s, &valuator.a1, &valuator.a2};
}

template <typename Real>
std::vector<const Parameter<Real>*> ModelParams<Real>::all() const {
  return {&encoder.w0,   &encoder.b0,   &encoder.w1, &encoder.b1,
          &valuator.w_s, &valuator.b_s, &valuator.a1, &valuator.a2};
}

template <typename Real>
void ModelParams<Real>::zero_grad() {
  for (auto* p : all()) p->zero_grad();
}

template <typename Real>
GraphContext<Real> GraphContext<Real>::build(const AttributedGraph& g, double centrality_eps) {
  GraphContext ctx;
  ctx.graph = &g;
  ctx.norm_adj = normalized_adjacency(g);
  ctx.features = g.features().template cast<Real>();
  ctx.centrality = gpn::centrality(g, centrality_eps);
  return ctx;
}

template struct ModelParams<float>;
template struct ModelParams<double>;
template struct GraphContext<float>;
template struct GraphContext<double>;

}  // namespace gpn
