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
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gpn/graph.hpp"
#include "gpn/metrics.hpp"
#include "gpn/model.hpp"
#include "gpn/optim.hpp"
#include "gpn/protonet.hpp"

namespace gpn {

struct LabeledNode {
  std::size_t node = 0;
  int class_id = 0;
  // Position of class_id within EpisodeTask::classes.
  std::size_t local = 0;
};

// One N-way K-shot task with M queries per class. Support and query are
// ordered class by class.
struct EpisodeTask {
  std::size_t n_way = 0;
  std::size_t k_shot = 0;
  std::size_t m_query = 0;
  std::vector<int> classes;
  std::vector<LabeledNode> support;
  std::vector<LabeledNode> query;

  std::vector<std::size_t> support_nodes() const;
  std::vector<std::size_t> query_nodes() const;
  std::vector<std::size_t> query_labels() const;
  // Rows of `support` grouped by local class.
  SupportGroups support_groups() const;
};

// Member lists of the classes in one split. Only those classes are ever
// looked up, so nodes of other splits stay untouched.
class ClassIndex {
 public:
  ClassIndex(const AttributedGraph& g, std::span<const int> classes);
  // Empty when `cls` was not indexed or has no nodes.
  const std::vector<std::size_t>& members(int cls) const;
  const AttributedGraph& graph() const { return *graph_; }

 private:
  const AttributedGraph* graph_;
  std::map<int, std::vector<std::size_t>> members_;
  std::vector<std::size_t> none_;
};

// Classes of `split` with at least `min_size` members. Excluded classes are
// reported through log_warning when `warn` is set.
std::vector<int> eligible_classes(const ClassIndex& index, std::span<const int> split,
                                  std::size_t min_size, bool warn = true);

// N classes uniformly without replacement, then K + M members per class
// uniformly without replacement; the first K become support. The label of
// each drawn node is read (and checked) through the graph. Throws
// std::invalid_argument when the split has fewer than N classes or a drawn
// class has fewer than K + M members.
EpisodeTask sample_task(const ClassIndex& index, std::span<const int> split, std::size_t n,
                        std::size_t k, std::size_t m, Rng& rng);
EpisodeTask sample_task(const AttributedGraph& g, std::span<const int> split, std::size_t n,
                        std::size_t k, std::size_t m, Rng& rng);

struct TrainConfig {
  std::size_t n_way = 5;
  std::size_t k_shot = 3;
  std::size_t m_query = 3;
  std::size_t episodes = 300;
  AdamConfig adam;
  double dropout = 0.5;
  double centrality_eps = kDefaultCentralityEps;
  std::size_t eval_every = 10;
  std::size_t patience = 10;
  std::size_t val_tasks = 20;
  std::uint64_t seed = 0;
  PrototypeStrategy strategy = PrototypeStrategy::kWeighted;
  Precision precision = Precision::kF64;

  // Throws std::invalid_argument on out-of-range settings.
  void validate() const;
};

template <typename Real>
struct Model {
  ModelParams<Real> params;
  AdamState<Real> adam;
};

template <typename Real>
struct EpisodeOutcome {
  double loss = 0.0;
  Matrix<Real> probs;  // query rows x N
};

// Forward pass over one task: encoder, valuator (weighted strategy only),
// prototypes, distance softmax, loss. In training mode also backpropagates
// and takes one Adam step.
template <typename Real>
EpisodeOutcome<Real> run_episode(const GraphContext<Real>& ctx, Model<Real>& model,
                                 const EpisodeTask& task, const TrainConfig& config,
                                 bool training, Rng& rng);

// Loss of one task with gradients of every parameter, no optimizer step.
// Dropout uses `rng` as in training mode when `dropout_rate` > 0.
template <typename Real>
double episode_loss_and_grad(const GraphContext<Real>& ctx, ModelParams<Real>& params,
                             const EpisodeTask& task, PrototypeStrategy strategy,
                             double dropout_rate, Rng& rng,
                             std::uint64_t* kink_signature = nullptr);

// Eval-mode node embeddings and adjusted importance scores. Neither depends
// on the task, so they are computed once and reused across tasks.
template <typename Real>
struct NodeRepresentations {
  Matrix<Real> embeddings;       // n x 16
  std::vector<Real> importance;  // n; empty for the mean strategy
};

template <typename Real>
NodeRepresentations<Real> represent_nodes(const GraphContext<Real>& ctx,
                                          const ModelParams<Real>& params,
                                          PrototypeStrategy strategy);

template <typename Real>
Matrix<Real> classify_task(const NodeRepresentations<Real>& reps, const EpisodeTask& task,
                           PrototypeStrategy strategy);

struct HistoryRecord {
  std::size_t episode = 0;
  double loss = 0.0;
  std::optional<double> val_accuracy;

  std::string to_json_line() const;
};

struct TrainResult {
  ModelParams<double> params;
  std::vector<HistoryRecord> history;
  std::size_t best_episode = 0;
  std::optional<double> best_val_accuracy;
  bool stopped_early = false;
};

// Episodic meta-training with validation-based early stopping. Returns the
// best-validation snapshot (the final parameters when no validation ran).
// Throws NumericError on a non-finite loss.
TrainResult train(const AttributedGraph& g, const TrainConfig& config,
                  const std::function<void(const HistoryRecord&)>& on_record = {});

struct MetaTestConfig {
  std::size_t n_way = 5;
  std::size_t k_shot = 5;
  std::size_t m_query = 5;
  std::size_t num_tasks = 50;
  std::size_t repeats = 10;
  std::uint64_t seed = 0;
  PrototypeStrategy strategy = PrototypeStrategy::kWeighted;
  Precision precision = Precision::kF64;
  double centrality_eps = kDefaultCentralityEps;
  // 0 = hardware concurrency.
  std::size_t threads = 1;
  // Support nodes per class replaced by a node drawn from another episode
  // class (label noise injection for robustness studies).
  std::size_t mislabeled_per_class = 0;
};

// Samples the test tasks of every repeat from the test split.
std::vector<std::vector<EpisodeTask>> sample_meta_test_tasks(const AttributedGraph& g,
                                                             const MetaTestConfig& config);

// Frozen-parameter evaluation on the test split: num_tasks tasks per repeat,
// metrics averaged over a repeat's tasks, mean and std over repeats.
MetricReport meta_test(const AttributedGraph& g, const ModelParams<double>& params,
                       const MetaTestConfig& config);

struct SimilarityExport {
  Matrix<double> matrix;
  std::vector<std::string> support_names;
  std::vector<std::string> query_names;
};

// Samples one test task and compares support embeddings scaled by K * beta_i
// with query embeddings under negative Euclidean distance.
SimilarityExport export_similarity(const AttributedGraph& g, const ModelParams<double>& params,
                                   const MetaTestConfig& config);

}  // namespace gpn
