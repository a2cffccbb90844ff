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

#include "gpn/encoder.hpp"

#include <stdexcept>
#include <string>

#include "gpn/optim.hpp"

namespace gpn {

template <typename Real>
EncoderParams<Real> EncoderParams<Real>::init(std::size_t feature_dim, Rng& rng) {
  EncoderParams p;
  p.w0 = Parameter<Real>("encoder.w0", glorot_uniform<Real>(feature_dim, kHiddenDim, rng));
  p.b0 = Parameter<Real>("encoder.b0", Matrix<Real>(1, kHiddenDim));
  p.w1 = Parameter<Real>("encoder.w1", glorot_uniform<Real>(kHiddenDim, kEmbeddingDim, rng));
  p.b1 = Parameter<Real>("encoder.b1", Matrix<Real>(1, kEmbeddingDim));
  return p;
}

template <typename Real>
EncoderVars bind(Tape<Real>& t, EncoderParams<Real>& p, bool trainable) {
  auto b = [&](Parameter<Real>& x) { return trainable ? t.parameter(x) : t.constant(x.value); };
  return EncoderVars{b(p.w0), b(p.b0), b(p.w1), b(p.b1)};
}

template <typename Real>
Var encode(Tape<Real>& t, const SparseMatrix& norm_adj, Var features, const EncoderVars& p,
           double dropout_rate, bool training, Rng& rng) {
  const auto& x = t.value(features);
  const auto& w0 = t.value(p.w0);
  if (x.cols() != w0.rows()) {
    throw std::invalid_argument("encode: feature dimension " + std::to_string(x.cols()) +
                                " does not match encoder input dimension " +
                                std::to_string(w0.rows()));
  }
  const auto relu = ActivationSpec::relu();
  Var h = dropout(t, features, dropout_rate, training, rng);
  h = activation(t, relu, add_bias(t, spmm(t, norm_adj, affine(t, h, p.w0)), p.b0));
  h = dropout(t, h, dropout_rate, training, rng);
  return activation(t, relu, add_bias(t, spmm(t, norm_adj, affine(t, h, p.w1)), p.b1));
}

template <typename Real>
Matrix<Real> encode(const SparseMatrix& norm_adj, const Matrix<Real>& features,
                    const EncoderParams<Real>& p) {
  Tape<Real> t;
  Rng unused(0);
  EncoderVars v{t.constant(p.w0.value), t.constant(p.b0.value), t.constant(p.w1.value),
                t.constant(p.b1.value)};
  return t.value(encode(t, norm_adj, t.constant(features), v, 0.0, false, unused));
}

#define GPN_INSTANTIATE_ENCODER(R)                                                           \
  template struct EncoderParams<R>;                                                          \
  template EncoderVars bind<R>(Tape<R>&, EncoderParams<R>&, bool);                           \
  template Var encode<R>(Tape<R>&, const SparseMatrix&, Var, const EncoderVars&, double, bool, \
                         Rng&);                                                              \
  template Matrix<R> encode<R>(const SparseMatrix&, const Matrix<R>&, const EncoderParams<R>&);

GPN_INSTANTIATE_ENCODER(float)
GPN_INSTANTIATE_ENCODER(double)

#undef GPN_INSTANTIATE_ENCODER

}  // namespace gpn
