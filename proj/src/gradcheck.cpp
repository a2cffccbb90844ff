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

#include "gpn/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include "gpn/episodic.hpp"
#include "gpn/random.hpp"

namespace gpn {

AttributedGraph random_test_graph(std::size_t nodes, std::size_t edges, std::size_t feature_dim,
                                  std::size_t classes, std::uint64_t seed) {
  if (nodes < 2 || classes == 0 || edges > nodes * (nodes - 1) / 2) {
    throw std::invalid_argument("random_test_graph: impossible size");
  }
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, nodes - 1);
  std::set<Edge> chosen;
  while (chosen.size() < edges) {
    const std::size_t u = pick(rng);
    const std::size_t v = pick(rng);
    if (u != v) chosen.emplace(std::min(u, v), std::max(u, v));
  }
  std::vector<Edge> edge_list(chosen.begin(), chosen.end());

  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix<double> x(nodes, feature_dim);
  for (auto& v : x.values()) v = gauss(rng);
  std::vector<int> labels(nodes);
  for (std::size_t i = 0; i < nodes; ++i) labels[i] = static_cast<int>(i % classes);
  ClassSplits splits;
  for (std::size_t c = 0; c < classes; ++c) splits.train.push_back(static_cast<int>(c));
  return build_graph(edge_list, std::move(x), std::move(labels), std::move(splits));
}

GradcheckResult run_gradcheck(const GradcheckConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  GradcheckResult result;
  result.seeds = config.seeds;

  for (std::size_t s = 0; s < config.seeds; ++s) {
    const std::uint64_t seed = split_seed(config.seed, s);
    const AttributedGraph g = random_test_graph(config.nodes, config.edges, config.feature_dim,
                                                config.n_way, split_seed(seed, 0));
    const auto ctx = GraphContext<double>::build(g, kDefaultCentralityEps);
    auto params = ModelParams<double>::init(g.feature_dim(), split_seed(seed, 1));
    // Zero biases would leave the check on a special point; move off it.
    Rng bias_rng(split_seed(seed, 2));
    std::normal_distribution<double> gauss(0.0, 0.1);
    for (auto* p : {&params.encoder.b0, &params.encoder.b1, &params.valuator.b_s}) {
      for (auto& v : p->value.values()) v = gauss(bias_rng);
    }
    Rng task_rng(split_seed(seed, 3));
    const EpisodeTask task = sample_task(g, g.splits().train, config.n_way, config.k_shot,
                                         config.m_query, task_rng);

    auto loss_at = [&](std::uint64_t* sig) {
      Rng dropout_rng(split_seed(seed, 4));
      return episode_loss_and_grad(ctx, params, task, config.strategy, config.dropout,
                                   dropout_rng, sig);
    };

    std::uint64_t sig0 = 0;
    loss_at(&sig0);
    std::vector<Matrix<double>> analytic;
    for (const auto* p : params.all()) analytic.push_back(p->grad);

    auto tensors = params.all();
    if (result.tensors.empty()) {
      for (const auto* p : tensors) result.tensors.push_back({p->name});
    }
    for (std::size_t t = 0; t < tensors.size(); ++t) {
      auto values = tensors[t]->value.values();
      TensorGradError& agg = result.tensors[t];
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double saved = values[i];
        std::uint64_t sig_plus = 0;
        std::uint64_t sig_minus = 0;
        values[i] = saved + config.h;
        const double plus = loss_at(&sig_plus);
        values[i] = saved - config.h;
        const double minus = loss_at(&sig_minus);
        values[i] = saved;
        if (sig_plus != sig0 || sig_minus != sig0) {
          ++agg.skipped;
          ++result.skipped;
          continue;
        }
        const double numeric = (plus - minus) / (2.0 * config.h);
        const double a = analytic[t].values()[i];
        const double denom = std::max({std::abs(a), std::abs(numeric), config.denominator_floor});
        const double rel = std::abs(a - numeric) / denom;
        agg.max_rel_error = std::max(agg.max_rel_error, rel);
        agg.max_abs_grad = std::max(agg.max_abs_grad, std::abs(a));
        ++agg.checked;
        ++result.checked;
        result.max_rel_error = std::max(result.max_rel_error, rel);
      }
    }
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.passed = result.checked > 0 && result.max_rel_error < config.tolerance;
  return result;
}

}  // namespace gpn
