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

#include "gpn/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "gpn/error.hpp"

namespace gpn {

template <typename Real>
void adam_step(std::span<Parameter<Real>* const> params, AdamState<Real>& state,
               const AdamConfig& config) {
  if (state.step == 0 && state.first_moment.empty()) {
    for (const Parameter<Real>* p : params) {
      state.first_moment.emplace_back(p->value.rows(), p->value.cols());
      state.second_moment.emplace_back(p->value.rows(), p->value.cols());
    }
  }
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: optimizer state tracks " +
                                std::to_string(state.first_moment.size()) + " tensors, got " +
                                std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Parameter<Real>& p = *params[k];
    if (!state.first_moment[k].same_shape(p.value) || !p.grad.same_shape(p.value)) {
      throw std::invalid_argument("adam_step: shape mismatch for parameter '" + p.name + "'");
    }
    for (Real g : p.grad.values()) {
      if (!std::isfinite(g)) {
        throw NumericError("adam_step: non-finite gradient for parameter '" + p.name + "'");
      }
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const Real b1 = static_cast<Real>(config.beta1);
  const Real b2 = static_cast<Real>(config.beta2);
  const Real bias1 = static_cast<Real>(1.0 - std::pow(config.beta1, t));
  const Real bias2 = static_cast<Real>(1.0 - std::pow(config.beta2, t));
  const Real lr = static_cast<Real>(config.lr);
  const Real eps = static_cast<Real>(config.eps);
  const Real wd = static_cast<Real>(config.weight_decay);

  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter<Real>& p = *params[k];
    auto value = p.value.values();
    auto grad = p.grad.values();
    auto m = state.first_moment[k].values();
    auto v = state.second_moment[k].values();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const Real g = grad[i] + wd * value[i];
      m[i] = b1 * m[i] + (Real(1) - b1) * g;
      v[i] = b2 * v[i] + (Real(1) - b2) * g * g;
      const Real m_hat = m[i] / bias1;
      const Real v_hat = v[i] / bias2;
      value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

template <typename Real>
Matrix<Real> glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix<Real> w(fan_in, fan_out);
  for (Real& x : w.values()) x = static_cast<Real>(dist(rng));
  return w;
}

template void adam_step<float>(std::span<Parameter<float>* const>, AdamState<float>&,
                               const AdamConfig&);
template void adam_step<double>(std::span<Parameter<double>* const>, AdamState<double>&,
                                const AdamConfig&);
template Matrix<float> glorot_uniform<float>(std::size_t, std::size_t, Rng&);
template Matrix<double> glorot_uniform<double>(std::size_t, std::size_t, Rng&);

}  // namespace gpn
