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
#include <string>
#include <vector>

#include "gpn/graph.hpp"
#include "gpn/protonet.hpp"

namespace gpn {

struct GradcheckConfig {
  std::size_t seeds = 10;
  std::size_t nodes = 30;
  std::size_t edges = 80;
  std::size_t feature_dim = 8;
  std::size_t n_way = 3;
  std::size_t k_shot = 2;
  std::size_t m_query = 2;
  double h = 1e-5;
  double tolerance = 1e-4;
  // Lower bound on the relative-error denominator so that entries whose
  // true derivative is ~0 are judged by absolute error instead.
  double denominator_floor = 1e-6;
  double dropout = 0.0;
  PrototypeStrategy strategy = PrototypeStrategy::kWeighted;
  std::uint64_t seed = 0;
};

struct TensorGradError {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_grad = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

struct GradcheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  // Entries whose +-h perturbation crossed a ReLU / LeakyReLU kink.
  std::size_t skipped = 0;
  std::size_t seeds = 0;
  std::vector<TensorGradError> tensors;  // aggregated over seeds
  double seconds = 0.0;
  bool passed = false;
};

// Random graph: `nodes` nodes assigned round-robin to `classes` classes (all
// in the train split), `edges` distinct undirected edges, N(0, 1) features.
AttributedGraph random_test_graph(std::size_t nodes, std::size_t edges, std::size_t feature_dim,
                                  std::size_t classes, std::uint64_t seed);

// Compares analytic gradients of the episode loss wrt every scalar of every
// parameter tensor against central differences, at 64-bit, one random graph
// and task per seed.
GradcheckResult run_gradcheck(const GradcheckConfig& config);

}  // namespace gpn
