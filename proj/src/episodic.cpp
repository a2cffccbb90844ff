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

#include "gpn/episodic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>

#include "gpn/error.hpp"
#include "gpn/log.hpp"
#include "json.hpp"

namespace gpn {

// ---- EpisodeTask -----------------------------------------------------------

std::vector<std::size_t> EpisodeTask::support_nodes() const {
  std::vector<std::size_t> out;
  out.reserve(support.size());
  for (const auto& s : support) out.push_back(s.node);
  return out;
}

std::vector<std::size_t> EpisodeTask::query_nodes() const {
  std::vector<std::size_t> out;
  out.reserve(query.size());
  for (const auto& q : query) out.push_back(q.node);
  return out;
}

std::vector<std::size_t> EpisodeTask::query_labels() const {
  std::vector<std::size_t> out;
  out.reserve(query.size());
  for (const auto& q : query) out.push_back(q.local);
  return out;
}

SupportGroups EpisodeTask::support_groups() const {
  SupportGroups groups(classes.size());
  for (std::size_t i = 0; i < support.size(); ++i) groups.at(support[i].local).push_back(i);
  return groups;
}

// ---- Sampling --------------------------------------------------------------

ClassIndex::ClassIndex(const AttributedGraph& g, std::span<const int> classes) : graph_(&g) {
  for (int c : classes) members_[c] = g.class_members(c);
}

const std::vector<std::size_t>& ClassIndex::members(int cls) const {
  auto it = members_.find(cls);
  return it == members_.end() ? none_ : it->second;
}

std::vector<int> eligible_classes(const ClassIndex& index, std::span<const int> split,
                                  std::size_t min_size, bool warn) {
  std::vector<int> out;
  for (int c : split) {
    if (index.members(c).size() >= min_size) {
      out.push_back(c);
    } else if (warn) {
      log_warning("class " + std::to_string(c) + " has " +
                  std::to_string(index.members(c).size()) + " nodes, fewer than the " +
                  std::to_string(min_size) + " needed per task; excluded from sampling");
    }
  }
  return out;
}

namespace {

// First `count` entries of `pool` become a uniform sample without replacement.
template <typename T>
void partial_shuffle(std::vector<T>& pool, std::size_t count, Rng& rng) {
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
}

}  // namespace

EpisodeTask sample_task(const ClassIndex& index, std::span<const int> split, std::size_t n,
                        std::size_t k, std::size_t m, Rng& rng) {
  if (n == 0 || k == 0 || m == 0) {
    throw std::invalid_argument("sample_task: N, K and M must all be positive");
  }
  if (split.size() < n) {
    throw std::invalid_argument("sample_task: split has " + std::to_string(split.size()) +
                                " classes, need at least " + std::to_string(n));
  }
  std::vector<int> classes(split.begin(), split.end());
  partial_shuffle(classes, n, rng);
  classes.resize(n);

  EpisodeTask task;
  task.n_way = n;
  task.k_shot = k;
  task.m_query = m;
  task.classes = classes;
  for (std::size_t local = 0; local < n; ++local) {
    const int cls = classes[local];
    std::vector<std::size_t> pool = index.members(cls);
    if (pool.size() < k + m) {
      throw std::invalid_argument("sample_task: class " + std::to_string(cls) + " has " +
                                  std::to_string(pool.size()) + " nodes, need " +
                                  std::to_string(k + m));
    }
    partial_shuffle(pool, k + m, rng);
    for (std::size_t i = 0; i < k + m; ++i) {
      if (index.graph().label(pool[i]) != cls) {
        throw std::logic_error("sample_task: class index out of sync with graph labels");
      }
    }
    for (std::size_t i = 0; i < k; ++i) task.support.push_back({pool[i], cls, local});
    for (std::size_t i = k; i < k + m; ++i) task.query.push_back({pool[i], cls, local});
  }
  return task;
}

EpisodeTask sample_task(const AttributedGraph& g, std::span<const int> split, std::size_t n,
                        std::size_t k, std::size_t m, Rng& rng) {
  return sample_task(ClassIndex(g, split), split, n, k, m, rng);
}

// ---- Config ----------------------------------------------------------------

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("TrainConfig: " + msg); };
  if (n_way < 2) fail("N must be at least 2");
  if (k_shot < 1 || m_query < 1) fail("K and M must be at least 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (!(adam.lr > 0.0)) fail("learning rate must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    fail("Adam betas must lie in [0, 1)");
  }
  if (!(adam.eps > 0.0)) fail("Adam eps must be positive");
  if (!(adam.weight_decay >= 0.0)) fail("weight decay must be nonnegative");
  if (!(centrality_eps > 0.0)) fail("centrality eps must be positive");
}

// ---- Episode forward / backward -------------------------------------------

namespace {

template <typename Real>
struct EpisodeGraph {
  Var loss;
  Matrix<Real> probs;
};

template <typename Real>
EpisodeGraph<Real> forward_episode(Tape<Real>& t, const GraphContext<Real>& ctx,
                                   ModelParams<Real>& params, const EpisodeTask& task,
                                   PrototypeStrategy strategy, double dropout_rate, bool training,
                                   bool trainable, Rng& rng) {
  const SupportGroups groups = task.support_groups();
  const std::vector<std::size_t> support = task.support_nodes();
  const std::vector<std::size_t> query = task.query_nodes();
  const std::vector<std::size_t> labels = task.query_labels();

  Var x = t.constant(ctx.features);
  const EncoderVars ev = bind(t, params.encoder, trainable);
  Var z = encode(t, ctx.norm_adj, x, ev, dropout_rate, training, rng);

  std::optional<Var> beta;
  if (strategy == PrototypeStrategy::kWeighted) {
    const ValuatorVars vv = bind(t, params.valuator, trainable);
    Var importance = valuate(t, ctx.norm_adj, ctx.centrality, x, vv);
    beta = support_weights(t, gather_rows(t, importance, support), groups);
  }
  Var protos = prototypes(t, gather_rows(t, z, support), beta, groups, strategy);
  Var logits = class_logits(t, gather_rows(t, z, query), protos);
  EpisodeGraph<Real> out;
  out.loss = episode_loss(t, logits, labels, &out.probs);
  return out;
}

}  // namespace

template <typename Real>
EpisodeOutcome<Real> run_episode(const GraphContext<Real>& ctx, Model<Real>& model,
                                 const EpisodeTask& task, const TrainConfig& config,
                                 bool training, Rng& rng) {
  Tape<Real> t;
  EpisodeGraph<Real> fwd = forward_episode(t, ctx, model.params, task, config.strategy,
                                           config.dropout, training, training, rng);
  EpisodeOutcome<Real> out;
  out.loss = static_cast<double>(t.value(fwd.loss)(0, 0));
  out.probs = std::move(fwd.probs);
  if (!std::isfinite(out.loss)) {
    throw NumericError("non-finite episode loss (" + std::to_string(out.loss) + ")");
  }
  if (training) {
    model.params.zero_grad();
    t.backward(fwd.loss);
    auto params = model.params.all();
    adam_step<Real>(params, model.adam, config.adam);
  }
  return out;
}

template <typename Real>
double episode_loss_and_grad(const GraphContext<Real>& ctx, ModelParams<Real>& params,
                             const EpisodeTask& task, PrototypeStrategy strategy,
                             double dropout_rate, Rng& rng, std::uint64_t* kink_signature) {
  Tape<Real> t;
  EpisodeGraph<Real> fwd = forward_episode(t, ctx, params, task, strategy, dropout_rate,
                                           dropout_rate > 0.0, true, rng);
  params.zero_grad();
  t.backward(fwd.loss);
  if (kink_signature != nullptr) *kink_signature = t.kink_signature();
  return static_cast<double>(t.value(fwd.loss)(0, 0));
}

template <typename Real>
NodeRepresentations<Real> represent_nodes(const GraphContext<Real>& ctx,
                                          const ModelParams<Real>& params,
                                          PrototypeStrategy strategy) {
  auto& mp = const_cast<ModelParams<Real>&>(params);
  Tape<Real> t;
  Rng unused(0);
  Var x = t.constant(ctx.features);
  NodeRepresentations<Real> reps;
  reps.embeddings = t.value(encode(t, ctx.norm_adj, x, bind(t, mp.encoder, false), 0.0, false, unused));
  if (strategy == PrototypeStrategy::kWeighted) {
    reps.importance =
        t.value(valuate(t, ctx.norm_adj, ctx.centrality, x, bind(t, mp.valuator, false))).data();
  }
  return reps;
}

template <typename Real>
Matrix<Real> classify_task(const NodeRepresentations<Real>& reps, const EpisodeTask& task,
                           PrototypeStrategy strategy) {
  const SupportGroups groups = task.support_groups();
  Matrix<Real> zs(task.support.size(), reps.embeddings.cols());
  std::vector<Real> scores;
  for (std::size_t i = 0; i < task.support.size(); ++i) {
    const auto src = reps.embeddings.row(task.support[i].node);
    std::copy(src.begin(), src.end(), zs.row(i).begin());
    if (strategy == PrototypeStrategy::kWeighted) {
      scores.push_back(reps.importance.at(task.support[i].node));
    }
  }
  std::vector<Real> beta;
  if (strategy == PrototypeStrategy::kWeighted) beta = support_weights<Real>(scores, groups);
  const Matrix<Real> protos = prototypes<Real>(zs, beta, groups, strategy);
  Matrix<Real> probs(task.query.size(), protos.rows());
  for (std::size_t q = 0; q < task.query.size(); ++q) {
    const auto p = classify<Real>(reps.embeddings.row(task.query[q].node), protos);
    std::copy(p.begin(), p.end(), probs.row(q).begin());
  }
  return probs;
}

// ---- Training --------------------------------------------------------------

std::string HistoryRecord::to_json_line() const {
  nlohmann::ordered_json j;
  j["episode"] = episode;
  j["loss"] = loss;
  if (val_accuracy) j["val_accuracy"] = *val_accuracy;
  return j.dump();
}

namespace {

template <typename Real>
double mean_task_accuracy(const NodeRepresentations<Real>& reps,
                          const std::vector<EpisodeTask>& tasks, PrototypeStrategy strategy) {
  double total = 0.0;
  for (const auto& task : tasks) {
    const auto preds = predict(classify_task(reps, task, strategy));
    total += accuracy(preds, task.query_labels());
  }
  return total / static_cast<double>(tasks.size());
}

template <typename Real>
TrainResult train_impl(const AttributedGraph& g, const TrainConfig& config,
                       const std::function<void(const HistoryRecord&)>& on_record) {
  const GraphContext<Real> ctx = GraphContext<Real>::build(g, config.centrality_eps);
  Model<Real> model{
      ModelParams<double>::init(g.feature_dim(), split_seed(config.seed, 0)).template cast<Real>(),
      {}};
  TrainResult result;
  result.params = model.params.template cast<double>();
  if (config.episodes == 0) return result;

  const ClassIndex train_index(g, g.splits().train);
  const ClassIndex val_index(g, g.splits().val);
  const std::size_t min_size = config.k_shot + config.m_query;
  const std::vector<int> train_classes = eligible_classes(train_index, g.splits().train, min_size);
  if (train_classes.size() < config.n_way) {
    throw std::invalid_argument("train split has " + std::to_string(train_classes.size()) +
                                " eligible classes, need at least " +
                                std::to_string(config.n_way));
  }
  const std::vector<int> val_classes = eligible_classes(val_index, g.splits().val, min_size);
  // A validation split narrower than N is still used, at fewer ways.
  const std::size_t val_way = std::min(config.n_way, val_classes.size());
  const bool validate = config.eval_every > 0 && config.val_tasks > 0 && val_way >= 2;
  if (config.eval_every > 0 && config.val_tasks > 0) {
    if (!validate) {
      log_warning("validation split has " + std::to_string(val_classes.size()) +
                  " eligible classes; training without early stopping");
    } else if (val_way < config.n_way) {
      log_warning("validation split has " + std::to_string(val_classes.size()) +
                  " eligible classes; validating with " + std::to_string(val_way) +
                  "-way tasks");
    }
  }

  Rng task_rng(split_seed(config.seed, 1));
  Rng dropout_rng(split_seed(config.seed, 2));
  std::vector<EpisodeTask> val_tasks;
  if (validate) {
    Rng val_rng(split_seed(config.seed, 3));
    for (std::size_t i = 0; i < config.val_tasks; ++i) {
      val_tasks.push_back(
          sample_task(val_index, val_classes, val_way, config.k_shot, config.m_query, val_rng));
    }
  }

  std::size_t evals_without_gain = 0;
  for (std::size_t ep = 1; ep <= config.episodes; ++ep) {
    const EpisodeTask task =
        sample_task(train_index, train_classes, config.n_way, config.k_shot, config.m_query, task_rng);
    EpisodeOutcome<Real> out;
    try {
      out = run_episode(ctx, model, task, config, true, dropout_rng);
    } catch (const NumericError& e) {
      throw NumericError("episode " + std::to_string(ep) + ": " + e.what());
    }
    HistoryRecord rec{ep, out.loss, std::nullopt};
    if (validate && ep % config.eval_every == 0) {
      const auto reps = represent_nodes(ctx, model.params, config.strategy);
      const double acc = mean_task_accuracy(reps, val_tasks, config.strategy);
      rec.val_accuracy = acc;
      if (!result.best_val_accuracy || acc > *result.best_val_accuracy) {
        result.best_val_accuracy = acc;
        result.best_episode = ep;
        result.params = model.params.template cast<double>();
        evals_without_gain = 0;
      } else {
        ++evals_without_gain;
      }
    }
    result.history.push_back(rec);
    if (on_record) on_record(rec);
    if (validate && evals_without_gain >= config.patience) {
      result.stopped_early = true;
      break;
    }
  }
  if (!result.best_val_accuracy) {
    result.params = model.params.template cast<double>();
    result.best_episode = result.history.size();
  }
  return result;
}

}  // namespace

TrainResult train(const AttributedGraph& g, const TrainConfig& config,
                  const std::function<void(const HistoryRecord&)>& on_record) {
  config.validate();
  if (config.precision == Precision::kF32) return train_impl<float>(g, config, on_record);
  return train_impl<double>(g, config, on_record);
}

// ---- Meta-test -------------------------------------------------------------

std::vector<std::vector<EpisodeTask>> sample_meta_test_tasks(const AttributedGraph& g,
                                                             const MetaTestConfig& config) {
  if (config.mislabeled_per_class >= config.k_shot && config.mislabeled_per_class > 0) {
    throw std::invalid_argument("mislabeled_per_class must be smaller than K");
  }
  const ClassIndex index(g, g.splits().test);
  const std::vector<int> test_classes =
      eligible_classes(index, g.splits().test, config.k_shot + config.m_query);
  if (test_classes.size() < config.n_way) {
    throw std::invalid_argument("test split has " + std::to_string(test_classes.size()) +
                                " eligible classes, need at least " +
                                std::to_string(config.n_way));
  }
  std::vector<std::vector<EpisodeTask>> out(config.repeats);
  for (std::size_t r = 0; r < config.repeats; ++r) {
    Rng rng(split_seed(config.seed, r));
    for (std::size_t i = 0; i < config.num_tasks; ++i) {
      EpisodeTask task = sample_task(index, test_classes, config.n_way, config.k_shot,
                                     config.m_query, rng);
      if (config.mislabeled_per_class > 0) {
        std::set<std::size_t> used;
        for (const auto& s : task.support) used.insert(s.node);
        for (const auto& q : task.query) used.insert(q.node);
        for (std::size_t c = 0; c < task.n_way; ++c) {
          const int donor = task.classes[(c + 1) % task.n_way];
          std::vector<std::size_t> pool;
          for (std::size_t v : index.members(donor)) {
            if (used.count(v) == 0) pool.push_back(v);
          }
          if (pool.size() < config.mislabeled_per_class) {
            throw std::invalid_argument("class " + std::to_string(donor) +
                                        " has too few spare nodes for label-noise injection");
          }
          partial_shuffle(pool, config.mislabeled_per_class, rng);
          for (std::size_t j = 0; j < config.mislabeled_per_class; ++j) {
            LabeledNode& slot = task.support[c * task.k_shot + task.k_shot - 1 - j];
            slot.node = pool[j];
            used.insert(pool[j]);
          }
        }
      }
      out[r].push_back(std::move(task));
    }
  }
  return out;
}

namespace {

template <typename Real>
MetricReport meta_test_impl(const AttributedGraph& g, const ModelParams<double>& params,
                            const MetaTestConfig& config) {
  const GraphContext<Real> ctx = GraphContext<Real>::build(g, config.centrality_eps);
  const ModelParams<Real> p = params.template cast<Real>();
  const NodeRepresentations<Real> reps = represent_nodes(ctx, p, config.strategy);
  const auto tasks = sample_meta_test_tasks(g, config);

  std::vector<std::size_t> classes(config.n_way);
  for (std::size_t c = 0; c < classes.size(); ++c) classes[c] = c;

  std::size_t threads = config.threads == 0 ? std::thread::hardware_concurrency() : config.threads;
  threads = std::max<std::size_t>(1, std::min(threads, config.num_tasks));

  MetricReport report;
  report.n_way = config.n_way;
  report.k_shot = config.k_shot;
  report.m_query = config.m_query;
  report.num_tasks = config.num_tasks;
  report.repeats = config.repeats;
  report.strategy = std::string(strategy_name(config.strategy));
  for (const auto& repeat_tasks : tasks) {
    std::vector<RepeatMetrics> per_task(repeat_tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < repeat_tasks.size(); i = next++) {
        const auto& task = repeat_tasks[i];
        const auto preds = predict(classify_task(reps, task, config.strategy));
        const auto labels = task.query_labels();
        const F1Scores f1 = f1_scores(preds, labels, classes);
        per_task[i] = {accuracy(preds, labels), f1.micro, f1.macro};
      }
    };
    if (threads == 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(worker);
    }
    RepeatMetrics agg;
    for (const auto& m : per_task) {
      agg.accuracy += m.accuracy;
      agg.micro_f1 += m.micro_f1;
      agg.macro_f1 += m.macro_f1;
    }
    const double denom = static_cast<double>(std::max<std::size_t>(per_task.size(), 1));
    agg.accuracy /= denom;
    agg.micro_f1 /= denom;
    agg.macro_f1 /= denom;
    report.per_repeat.push_back(agg);
  }
  report.summarize();
  return report;
}

}  // namespace

MetricReport meta_test(const AttributedGraph& g, const ModelParams<double>& params,
                       const MetaTestConfig& config) {
  if (params.feature_dim() != g.feature_dim()) {
    throw std::invalid_argument("model expects " + std::to_string(params.feature_dim()) +
                                " features, graph has " + std::to_string(g.feature_dim()));
  }
  if (config.precision == Precision::kF32) return meta_test_impl<float>(g, params, config);
  return meta_test_impl<double>(g, params, config);
}

SimilarityExport export_similarity(const AttributedGraph& g, const ModelParams<double>& params,
                                   const MetaTestConfig& config) {
  if (params.feature_dim() != g.feature_dim()) {
    throw std::invalid_argument("model expects " + std::to_string(params.feature_dim()) +
                                " features, graph has " + std::to_string(g.feature_dim()));
  }
  MetaTestConfig one = config;
  one.num_tasks = 1;
  one.repeats = 1;
  const EpisodeTask task = sample_meta_test_tasks(g, one).at(0).at(0);
  const GraphContext<double> ctx = GraphContext<double>::build(g, config.centrality_eps);
  const NodeRepresentations<double> reps = represent_nodes(ctx, params, config.strategy);

  const SupportGroups groups = task.support_groups();
  std::vector<double> beta(task.support.size(), 1.0 / static_cast<double>(task.k_shot));
  if (config.strategy == PrototypeStrategy::kWeighted) {
    std::vector<double> scores;
    for (const auto& s : task.support) scores.push_back(reps.importance.at(s.node));
    beta = support_weights<double>(scores, groups);
  }
  const std::size_t dim = reps.embeddings.cols();
  Matrix<double> support(task.support.size(), dim);
  Matrix<double> queries(task.query.size(), dim);
  SimilarityExport out;
  for (std::size_t i = 0; i < task.support.size(); ++i) {
    const double w = static_cast<double>(task.k_shot) * beta[i];
    const auto z = reps.embeddings.row(task.support[i].node);
    for (std::size_t c = 0; c < dim; ++c) support(i, c) = w * z[c];
    out.support_names.push_back(std::to_string(task.support[i].class_id) + ":" +
                                std::to_string(task.support[i].node));
  }
  for (std::size_t j = 0; j < task.query.size(); ++j) {
    const auto z = reps.embeddings.row(task.query[j].node);
    std::copy(z.begin(), z.end(), queries.row(j).begin());
    out.query_names.push_back(std::to_string(task.query[j].class_id) + ":" +
                              std::to_string(task.query[j].node));
  }
  out.matrix = similarity_matrix(support, queries);
  return out;
}

#define GPN_INSTANTIATE_EPISODIC(R)                                                             \
  template EpisodeOutcome<R> run_episode<R>(const GraphContext<R>&, Model<R>&,                  \
                                            const EpisodeTask&, const TrainConfig&, bool, Rng&); \
  template double episode_loss_and_grad<R>(const GraphContext<R>&, ModelParams<R>&,             \
                                           const EpisodeTask&, PrototypeStrategy, double, Rng&, \
                                           std::uint64_t*);                                     \
  template NodeRepresentations<R> represent_nodes<R>(const GraphContext<R>&,                    \
                                                     const ModelParams<R>&, PrototypeStrategy); \
  template Matrix<R> classify_task<R>(const NodeRepresentations<R>&, const EpisodeTask&,        \
                                      PrototypeStrategy);

GPN_INSTANTIATE_EPISODIC(float)
GPN_INSTANTIATE_EPISODIC(double)

#undef GPN_INSTANTIATE_EPISODIC

}  // namespace gpn
