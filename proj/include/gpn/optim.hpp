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
#include <span>
#include <vector>

#include "gpn/autodiff.hpp"
#include "gpn/random.hpp"

namespace gpn {

struct AdamConfig {
  double lr = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Coupled L2: added to the gradient before the moment updates.
  double weight_decay = 0.0005;
};

template <typename Real>
struct AdamState {
  std::vector<Matrix<Real>> first_moment;
  std::vector<Matrix<Real>> second_moment;
  std::uint64_t step = 0;
};

// One bias-corrected Adam update over `params`, in place. Lazily sizes the
// state on the first call. Throws NumericError on a non-finite gradient and
// std::invalid_argument if the state does not match the parameter shapes.
template <typename Real>
void adam_step(std::span<Parameter<Real>* const> params, AdamState<Real>& state,
               const AdamConfig& config);

// Uniform on [-sqrt(6 / (fan_in + fan_out)), +sqrt(6 / (fan_in + fan_out))].
template <typename Real>
Matrix<Real> glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace gpn
