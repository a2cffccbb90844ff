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

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "gpn/dataset.hpp"
#include "gpn/graph.hpp"
#include "gpn/tensor.hpp"

namespace gpn::testing {

inline Matrix<double> random_matrix(std::size_t r, std::size_t c, std::uint64_t seed,
                                    double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  Matrix<double> m(r, c);
  for (auto& v : m.values()) v = g(rng);
  return m;
}

// Graph with every node in class 0 (train split) unless labels are given.
inline AttributedGraph make_graph(std::size_t n, std::vector<Edge> edges,
                                  std::size_t feature_dim = 2, std::vector<int> labels = {}) {
  if (labels.empty()) labels.assign(n, 0);
  ClassSplits splits;
  std::vector<int> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  splits.train = classes;
  return build_graph(edges, Matrix<double>(n, feature_dim, 1.0), std::move(labels), splits);
}

inline AttributedGraph sbm_graph(const SbmSpec& spec) {
  DatasetBundle b = generate_sbm(spec);
  return build_graph(b.edges, std::move(b.features), std::move(b.labels), std::move(b.splits));
}

// Central difference of a scalar function of one matrix entry.
inline double central_difference(const std::function<double()>& f, double& x, double h) {
  const double saved = x;
  x = saved + h;
  const double plus = f();
  x = saved - h;
  const double minus = f();
  x = saved;
  return (plus - minus) / (2.0 * h);
}

inline double rel_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace gpn::testing
