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

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "gpn/episodic.hpp"
#include "gpn/error.hpp"
#include "gpn/log.hpp"
#include "json.hpp"
#include "test_util.hpp"

using namespace gpn;

namespace {

SbmSpec spec_with(std::size_t classes, std::size_t train, std::size_t val, std::size_t test,
                  std::size_t per_class, std::uint64_t seed) {
  SbmSpec s;
  s.num_classes = classes;
  s.train_classes = train;
  s.val_classes = val;
  s.test_classes = test;
  s.nodes_per_class = per_class;
  s.seed = seed;
  return s;
}

std::set<int> as_set(std::span<const int> v) { return {v.begin(), v.end()}; }

void check_task_shape(const AttributedGraph& g, const EpisodeTask& t, std::span<const int> split) {
  CHECK(t.classes.size() == t.n_way);
  CHECK(t.support.size() == t.n_way * t.k_shot);
  CHECK(t.query.size() == t.n_way * t.m_query);
  CHECK(as_set(t.classes).size() == t.n_way);
  const auto allowed = as_set(split);
  for (int c : t.classes) CHECK(allowed.count(c) == 1);
  std::set<std::size_t> seen;
  for (const auto* part : {&t.support, &t.query}) {
    for (const auto& ln : *part) {
      CHECK(seen.insert(ln.node).second);
      CHECK(t.classes[ln.local] == ln.class_id);
      CHECK(g.label(ln.node) == ln.class_id);
    }
  }
  const auto groups = t.support_groups();
  REQUIRE(groups.size() == t.n_way);
  for (std::size_t c = 0; c < t.n_way; ++c) {
    CHECK(groups[c].size() == t.k_shot);
    for (std::size_t row : groups[c]) CHECK(t.support[row].local == c);
  }
}

// Clustered features with no edges: with identity-like weights the
// embedding of every node is its (class-constant) feature vector.
AttributedGraph separable_toy() {
  const std::size_t classes = 4;
  const std::size_t per = 6;
  Matrix<double> x(classes * per, classes);
  std::vector<int> labels;
  for (std::size_t i = 0; i < classes * per; ++i) {
    x(i, i / per) = 5.0;
    labels.push_back(static_cast<int>(i / per));
  }
  ClassSplits s;
  s.train = {0};
  s.test = {1, 2, 3};
  return build_graph({}, x, labels, s);
}

ModelParams<double> passthrough_params(std::size_t dim) {
  auto p = ModelParams<double>::init(dim, 1);
  for (auto* t : p.all()) t->value = Matrix<double>(t->value.rows(), t->value.cols());
  for (std::size_t i = 0; i < dim; ++i) {
    p.encoder.w0.value(i, i) = 1.0;
    p.encoder.w1.value(i, i) = 1.0;
  }
  return p;
}

}  // namespace

TEST_CASE("sample_task example and errors") {
  const auto g = gpn::testing::make_graph(12, {}, 2, {0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 1});
  const std::vector<int> split{0, 1, 2};
  Rng rng(3);
  const auto t = sample_task(g, split, 2, 1, 2, rng);
  check_task_shape(g, t, split);
  CHECK(t.support_nodes().size() == 2);
  CHECK(t.query_labels().size() == 4);
  CHECK(t.query_labels()[0] == 0);
  CHECK(t.query_labels()[3] == 1);

  CHECK_THROWS_AS(sample_task(g, split, 4, 1, 1, rng), std::invalid_argument);
  // Class 2 has 3 members; 4 are needed.
  CHECK_THROWS_AS(sample_task(g, std::vector<int>{0, 2}, 2, 2, 2, rng), std::invalid_argument);
  const ClassIndex idx(g, split);
  CHECK(eligible_classes(idx, split, 4) == std::vector<int>{0, 1});
  CHECK(idx.members(7).empty());
}

TEST_CASE("sampled tasks are always disjoint and well formed") {
  const auto g = gpn::testing::sbm_graph(spec_with(6, 6, 0, 0, 9, 1));
  const auto split = g.splits().train;
  const ClassIndex idx(g, split);
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const std::size_t n = 2 + i % 5;
    const std::size_t k = 1 + i % 4;
    const std::size_t m = 1 + i % 5;
    check_task_shape(g, sample_task(idx, split, n, k, m, rng), split);
  }
}

TEST_CASE("sampling marginals are uniform") {
  // 6 classes of 10 nodes, 3-way 2-shot 3-query.
  const auto g = gpn::testing::sbm_graph(spec_with(6, 6, 0, 0, 10, 2));
  const auto split = g.splits().train;
  const ClassIndex idx(g, split);
  Rng rng(11);
  const double trials = 10000;
  std::map<int, double> class_hits;
  std::vector<double> support_hits(g.num_nodes(), 0.0);
  std::vector<double> query_hits(g.num_nodes(), 0.0);
  for (int i = 0; i < trials; ++i) {
    const auto t = sample_task(idx, split, 3, 2, 3, rng);
    for (int c : t.classes) class_hits[c] += 1.0;
    for (const auto& ln : t.support) support_hits[ln.node] += 1.0;
    for (const auto& ln : t.query) query_hits[ln.node] += 1.0;
  }
  auto within = [&](double hits, double p, double z) {
    const double se = std::sqrt(p * (1 - p) / trials);
    return std::abs(hits / trials - p) <= z * se;
  };
  for (int c : split) CHECK(within(class_hits[c], 0.5, 3.0));
  // 60 node-level checks; 4 standard errors keeps the family-wise rate low.
  for (std::size_t v = 0; v < g.num_nodes(); ++v) {
    CHECK(within(support_hits[v], 0.5 * 0.2, 4.0));
    CHECK(within(query_hits[v], 0.5 * 0.3, 4.0));
  }
}

TEST_CASE("sampling reads only the labels of drawn nodes") {
  const auto g = gpn::testing::sbm_graph(spec_with(10, 5, 2, 3, 20, 4));
  const auto split = g.splits().train;
  std::vector<std::size_t> read;
  std::set<int> classes;
  Rng rng(1);
  EpisodeTask t;
  {
    ScopedLabelObserver obs([&](std::size_t v) { read.push_back(v); },
                            [&](int c) { classes.insert(c); });
    t = sample_task(g, split, 5, 3, 3, rng);
  }
  auto drawn = t.support_nodes();
  const auto q = t.query_nodes();
  drawn.insert(drawn.end(), q.begin(), q.end());
  std::sort(drawn.begin(), drawn.end());
  std::sort(read.begin(), read.end());
  read.erase(std::unique(read.begin(), read.end()), read.end());
  CHECK(read == drawn);
  CHECK(classes == as_set(split));
}

TEST_CASE("training never touches test labels") {
  const auto g = gpn::testing::sbm_graph(spec_with(10, 5, 2, 3, 20, 4));
  const auto allowed = [&] {
    auto s = as_set(g.splits().train);
    for (int c : g.splits().val) s.insert(c);
    return s;
  }();
  std::set<std::size_t> nodes;
  std::set<int> classes;
  TrainConfig cfg;
  cfg.episodes = 30;
  cfg.eval_every = 5;
  cfg.val_tasks = 3;
  {
    ScopedLabelObserver obs([&](std::size_t v) { nodes.insert(v); },
                            [&](int c) { classes.insert(c); });
    train(g, cfg);
  }
  CHECK(!nodes.empty());
  for (int c : classes) CHECK(allowed.count(c) == 1);
  for (std::size_t v : nodes) CHECK(allowed.count(g.label(v)) == 1);
}

TEST_CASE("training configuration is validated") {
  const auto bad = [](auto mutate) {
    TrainConfig c;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  };
  bad([](TrainConfig& c) { c.n_way = 1; });
  bad([](TrainConfig& c) { c.k_shot = 0; });
  bad([](TrainConfig& c) { c.m_query = 0; });
  bad([](TrainConfig& c) { c.dropout = 1.0; });
  bad([](TrainConfig& c) { c.adam.lr = 0.0; });
  bad([](TrainConfig& c) { c.adam.beta1 = 1.0; });
  bad([](TrainConfig& c) { c.adam.weight_decay = -1.0; });
  bad([](TrainConfig& c) { c.centrality_eps = 0.0; });
  TrainConfig{}.validate();

  const auto g = gpn::testing::sbm_graph(spec_with(10, 5, 2, 3, 20, 4));
  TrainConfig c;
  c.n_way = 6;
  CHECK_THROWS_AS(train(g, c), std::invalid_argument);
}

TEST_CASE("initial episode loss is close to log N") {
  const auto g = gpn::testing::sbm_graph(SbmSpec{});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    TrainConfig c;
    c.episodes = 1;
    c.seed = seed;
    const auto r = train(g, c);
    REQUIRE(r.history.size() == 1);
    CAPTURE(seed);
    CHECK(std::abs(r.history[0].loss - std::log(5.0)) <= 0.5);
  }
}

TEST_CASE("zero episodes returns the initialization and training is reproducible") {
  const auto g = gpn::testing::sbm_graph(spec_with(10, 5, 2, 3, 20, 4));
  TrainConfig c;
  c.episodes = 0;
  c.seed = 9;
  const auto r0 = train(g, c);
  CHECK(r0.history.empty());
  const auto init = ModelParams<double>::init(g.feature_dim(), split_seed(9, 0));
  for (std::size_t i = 0; i < init.all().size(); ++i) {
    CHECK(r0.params.all()[i]->value == init.all()[i]->value);
  }

  c.episodes = 40;
  c.eval_every = 10;
  c.val_tasks = 5;
  for (Precision prec : {Precision::kF64, Precision::kF32}) {
    c.precision = prec;
    const auto a = train(g, c);
    const auto b = train(g, c);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
      CHECK(a.history[i].to_json_line() == b.history[i].to_json_line());
      CHECK(std::isfinite(a.history[i].loss));
    }
    for (std::size_t i = 0; i < a.params.all().size(); ++i) {
      CHECK(a.params.all()[i]->value == b.params.all()[i]->value);
    }
  }
}

TEST_CASE("one training step moves every parameter") {
  const auto g = gpn::testing::sbm_graph(spec_with(10, 5, 2, 3, 20, 4));
  const auto ctx = GraphContext<double>::build(g, kDefaultCentralityEps);
  Model<double> model{ModelParams<double>::init(g.feature_dim(), 4), {}};
  const auto before = model.params;
  TrainConfig cfg;
  Rng rng(2);
  const auto task = sample_task(g, g.splits().train, 5, 3, 3, rng);
  const auto out = run_episode(ctx, model, task, cfg, true, rng);
  CHECK(std::isfinite(out.loss));
  for (std::size_t i = 0; i < before.all().size(); ++i) {
    CAPTURE(before.all()[i]->name);
    CHECK(!(model.params.all()[i]->value == before.all()[i]->value));
  }
}

TEST_CASE("eval episodes agree with precomputed representations") {
  const auto g = gpn::testing::sbm_graph(spec_with(10, 5, 2, 3, 20, 6));
  const auto ctx = GraphContext<double>::build(g, kDefaultCentralityEps);
  Model<double> model{ModelParams<double>::init(g.feature_dim(), 4), {}};
  Rng rng(8);
  for (auto strategy : {PrototypeStrategy::kWeighted, PrototypeStrategy::kMean}) {
    TrainConfig cfg;
    cfg.strategy = strategy;
    const auto reps = represent_nodes(ctx, model.params, strategy);
    CHECK(reps.embeddings.rows() == g.num_nodes());
    CHECK(reps.importance.size() == (strategy == PrototypeStrategy::kWeighted ? g.num_nodes() : 0));
    for (int i = 0; i < 10; ++i) {
      const auto task = sample_task(g, g.splits().train, 4, 2, 3, rng);
      const auto before = model.params.encoder.w0.value;
      const auto out = run_episode(ctx, model, task, cfg, false, rng);
      CHECK(model.params.encoder.w0.value == before);
      const auto eager = classify_task(reps, task, strategy);
      for (std::size_t k = 0; k < eager.size(); ++k) {
        CHECK(std::abs(eager.values()[k] - out.probs.values()[k]) < 1e-12);
      }
      for (std::size_t r = 0; r < eager.rows(); ++r) {
        double total = 0.0;
        for (double v : eager.row(r)) total += v;
        CHECK(std::abs(total - 1.0) <= 1e-9);
      }
    }
  }
}

TEST_CASE("early stopping keeps the best validation snapshot") {
  const auto g = gpn::testing::sbm_graph(spec_with(10, 5, 2, 3, 20, 4));
  TrainConfig c;
  c.episodes = 300;
  c.eval_every = 5;
  c.patience = 2;
  c.val_tasks = 5;
  std::vector<HistoryRecord> seen;
  const auto r = train(g, c, [&](const HistoryRecord& h) { seen.push_back(h); });
  CHECK(seen.size() == r.history.size());
  REQUIRE(r.best_val_accuracy.has_value());
  double best = -1.0;
  std::size_t best_ep = 0;
  std::size_t evals = 0;
  for (const auto& h : r.history) {
    if (!h.val_accuracy) continue;
    ++evals;
    CHECK(h.episode % 5 == 0);
    if (*h.val_accuracy > best) {
      best = *h.val_accuracy;
      best_ep = h.episode;
    }
  }
  CHECK(evals > 0);
  CHECK(*r.best_val_accuracy == best);
  CHECK(r.best_episode == best_ep);
  if (r.stopped_early) CHECK(r.history.back().episode == best_ep + 5 * c.patience);

  const auto j = nlohmann::json::parse(r.history.front().to_json_line());
  CHECK(j.at("episode") == 1);
  CHECK(!j.contains("val_accuracy"));
}

TEST_CASE("meta-test on a perfectly separable toy is exact") {
  const auto g = separable_toy();
  const auto p = passthrough_params(g.feature_dim());
  MetaTestConfig c;
  c.n_way = 3;
  c.k_shot = 2;
  c.m_query = 3;
  c.num_tasks = 10;
  c.repeats = 4;
  for (auto s : {PrototypeStrategy::kWeighted, PrototypeStrategy::kMean}) {
    c.strategy = s;
    const auto r = meta_test(g, p, c);
    CHECK(r.per_repeat.size() == 4);
    CHECK(r.accuracy.mean == 1.0);
    CHECK(r.accuracy.std == 0.0);
    CHECK(r.macro_f1.mean == 1.0);
  }
}

TEST_CASE("uninformative graphs give chance accuracy") {
  auto s = spec_with(10, 5, 0, 5, 40, 12);
  s.class_mean_scale = 0.0;
  s.p_in = s.p_out = 0.02;
  const auto g = gpn::testing::sbm_graph(s);
  const auto p = ModelParams<double>::init(g.feature_dim(), 3);
  MetaTestConfig c;
  c.num_tasks = 100;
  c.repeats = 5;
  const auto r = meta_test(g, p, c);
  CHECK(std::abs(r.accuracy.mean - 0.2) <= 0.05);
}

TEST_CASE("a constant valuator reproduces the mean strategy") {
  const auto g = gpn::testing::sbm_graph(spec_with(10, 5, 0, 5, 20, 5));
  auto p = ModelParams<double>::init(g.feature_dim(), 6);
  p.valuator.w_s.value = Matrix<double>(g.feature_dim(), 1);
  p.valuator.b_s.value = Matrix<double>(1, 1);
  const auto ctx = GraphContext<double>::build(g, kDefaultCentralityEps);
  const auto rw = represent_nodes(ctx, p, PrototypeStrategy::kWeighted);
  for (double v : rw.importance) CHECK(v == 0.5);
  const auto rm = represent_nodes(ctx, p, PrototypeStrategy::kMean);
  MetaTestConfig c;
  c.num_tasks = 20;
  c.repeats = 2;
  for (const auto& tasks : sample_meta_test_tasks(g, c)) {
    for (const auto& t : tasks) {
      const auto a = classify_task(rw, t, PrototypeStrategy::kWeighted);
      const auto b = classify_task(rm, t, PrototypeStrategy::kMean);
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.values()[i] - b.values()[i]) <= 1e-10);
      CHECK(predict(a) == predict(b));
    }
  }
  const auto ra = meta_test(g, p, c);
  c.strategy = PrototypeStrategy::kMean;
  const auto rb = meta_test(g, p, c);
  for (std::size_t i = 0; i < ra.per_repeat.size(); ++i) {
    CHECK(ra.per_repeat[i].accuracy == rb.per_repeat[i].accuracy);
  }
}

TEST_CASE("mislabel injection swaps in nodes of the next episode class") {
  const auto g = gpn::testing::sbm_graph(spec_with(10, 5, 0, 5, 20, 5));
  MetaTestConfig c;
  c.num_tasks = 30;
  c.repeats = 2;
  c.k_shot = 3;
  c.mislabeled_per_class = 2;
  const auto noisy = sample_meta_test_tasks(g, c);
  for (std::size_t r = 0; r < noisy.size(); ++r) {
    for (std::size_t i = 0; i < noisy[r].size(); ++i) {
      const auto& b = noisy[r][i];
      std::set<std::size_t> nodes;
      for (const auto& ln : b.support) nodes.insert(ln.node);
      for (const auto& ln : b.query) nodes.insert(ln.node);
      CHECK(nodes.size() == b.support.size() + b.query.size());
      for (std::size_t s = 0; s < b.support.size(); ++s) {
        const std::size_t slot = s / c.k_shot;
        const bool swapped = s % c.k_shot >= c.k_shot - 2;
        CHECK(b.support[s].class_id == b.classes[slot]);
        const int truth = g.label(b.support[s].node);
        CHECK(truth == (swapped ? b.classes[(slot + 1) % c.n_way] : b.classes[slot]));
      }
    }
  }
  c.mislabeled_per_class = 3;
  CHECK_THROWS_AS(sample_meta_test_tasks(g, c), std::invalid_argument);
}

TEST_CASE("meta-test is independent of the thread count and checks its inputs") {
  const auto g = gpn::testing::sbm_graph(spec_with(10, 5, 0, 5, 20, 7));
  const auto p = ModelParams<double>::init(g.feature_dim(), 2);
  MetaTestConfig c;
  c.num_tasks = 25;
  c.repeats = 3;
  c.threads = 1;
  const auto a = meta_test(g, p, c);
  c.threads = 4;
  CHECK(meta_test(g, p, c).to_json() == a.to_json());
  c.precision = Precision::kF32;
  CHECK(std::abs(meta_test(g, p, c).accuracy.mean - a.accuracy.mean) < 0.05);

  c.n_way = 6;
  CHECK_THROWS_AS(meta_test(g, p, c), std::invalid_argument);
  c.n_way = 5;
  const auto wrong = ModelParams<double>::init(g.feature_dim() + 1, 2);
  CHECK_THROWS_AS(meta_test(g, wrong, c), std::invalid_argument);

  // Evaluation reads test-class labels only.
  std::set<int> classes;
  std::set<std::size_t> nodes;
  {
    ScopedLabelObserver obs([&](std::size_t v) { nodes.insert(v); },
                            [&](int cls) { classes.insert(cls); });
    meta_test(g, p, c);
  }
  const auto test = as_set(g.splits().test);
  for (int cls : classes) CHECK(test.count(cls) == 1);
  for (std::size_t v : nodes) CHECK(test.count(g.label(v)) == 1);
}

TEST_CASE("similarity export shape and scaling") {
  const auto g = separable_toy();
  const auto p = passthrough_params(g.feature_dim());
  MetaTestConfig c;
  c.n_way = 3;
  c.k_shot = 2;
  c.m_query = 2;
  c.strategy = PrototypeStrategy::kMean;
  const auto e = export_similarity(g, p, c);
  CHECK(e.matrix.rows() == 6);
  CHECK(e.matrix.cols() == 6);
  CHECK(e.support_names.size() == 6);
  CHECK(e.query_names[0].find(':') != std::string::npos);
  // Uniform beta with K = 2 leaves embeddings unchanged: same class gives 0.
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      const bool same = i / 2 == j / 2;
      if (same) CHECK(e.matrix(i, j) == 0.0);
      else CHECK(e.matrix(i, j) == doctest::Approx(-std::sqrt(50.0)));
    }
  }
}
