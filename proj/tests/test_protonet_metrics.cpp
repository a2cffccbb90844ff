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
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "gpn/metrics.hpp"
#include "gpn/protonet.hpp"
#include "json.hpp"
#include "test_util.hpp"

using namespace gpn;
using gpn::testing::random_matrix;

namespace {

SupportGroups contiguous_groups(std::size_t n, std::size_t k) {
  SupportGroups g(n);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t j = 0; j < k; ++j) g[c].push_back(c * k + j);
  }
  return g;
}

std::vector<double> column(const Matrix<double>& m) { return {m.values().begin(), m.values().end()}; }

}  // namespace

TEST_CASE("strategy names round trip") {
  CHECK(parse_strategy("gpn") == PrototypeStrategy::kWeighted);
  CHECK(parse_strategy("gpn-naive") == PrototypeStrategy::kMean);
  CHECK(strategy_name(PrototypeStrategy::kWeighted) == "gpn");
  CHECK(strategy_name(PrototypeStrategy::kMean) == "gpn-naive");
  CHECK_THROWS_AS(parse_strategy("proto"), std::invalid_argument);
}

TEST_CASE("support weights examples") {
  const auto groups = contiguous_groups(2, 2);
  const std::vector<double> s{0.0, std::log(3.0), 5.0, 5.0};
  const auto b = support_weights<double>(s, groups);
  CHECK(b[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(b[1] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(b[2] == 0.5);
  CHECK(b[3] == 0.5);
  // Single-shot groups get weight one.
  const auto one = support_weights<double>(std::vector<double>{0.3, 0.9}, contiguous_groups(2, 1));
  CHECK(one == std::vector<double>{1.0, 1.0});
}

TEST_CASE("support weights are shift invariant per class and sum to one") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 4;
    const std::size_t k = 1 + trial % 5;
    const auto groups = contiguous_groups(n, k);
    std::vector<double> s(n * k);
    for (auto& v : s) v = g(rng) * 3.0;
    const auto b = support_weights<double>(s, groups);
    auto shifted = s;
    for (std::size_t c = 0; c < n; ++c) {
      const double delta = g(rng) * 10.0;
      for (std::size_t i : groups[c]) shifted[i] += delta;
    }
    const auto bs = support_weights<double>(shifted, groups);
    for (std::size_t c = 0; c < n; ++c) {
      double total = 0.0;
      for (std::size_t i : groups[c]) {
        total += b[i];
        CHECK(b[i] > 0.0);
        CHECK(std::abs(b[i] - bs[i]) < 1e-12);
      }
      CHECK(std::abs(total - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("prototype examples") {
  const Matrix<double> z(2, 2, {0, 0, 4, 8});
  const SupportGroups groups{{0, 1}};
  const std::vector<double> beta{0.25, 0.75};
  const auto w = prototypes<double>(z, beta, groups, PrototypeStrategy::kWeighted);
  CHECK(w(0, 0) == 3.0);
  CHECK(w(0, 1) == 6.0);
  const auto m = prototypes<double>(z, {}, groups, PrototypeStrategy::kMean);
  CHECK(m(0, 0) == 2.0);
  CHECK(m(0, 1) == 4.0);
  CHECK_THROWS_AS(prototypes<double>(z, {}, groups, PrototypeStrategy::kWeighted),
                  std::invalid_argument);

  Tape<double> t;
  Var zv = t.constant(z);
  CHECK_THROWS_AS(prototypes(t, zv, std::nullopt, groups, PrototypeStrategy::kWeighted),
                  std::invalid_argument);
  CHECK_THROWS_AS(prototypes(t, zv, t.constant(Matrix<double>(2, 1, 0.5)), groups,
                             PrototypeStrategy::kMean),
                  std::invalid_argument);
}

TEST_CASE("classification examples") {
  const Matrix<double> protos(2, 2, {0, 0, 1, 0});
  const auto p = classify<double>(std::vector<double>{0, 0}, protos);
  CHECK(p[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(std::exp(-1.0) / (1.0 + std::exp(-1.0))).epsilon(1e-14));
  // Far away queries still give a proper distribution.
  const auto far = classify<double>(std::vector<double>{1e3, 0}, protos);
  CHECK(far[1] == doctest::Approx(1.0));
  CHECK(std::isfinite(far[0]));

  Matrix<double> uniform(3, 5, 0.2);
  const std::vector<std::size_t> labels{0, 3, 4};
  CHECK(episode_loss<double>(uniform, labels) == doctest::Approx(std::log(5.0)).epsilon(1e-14));
  Matrix<double> ties(1, 3, {0.4, 0.4, 0.2});
  CHECK(predict(ties) == std::vector<std::size_t>{0});
  CHECK(predict(Matrix<double>(2, 2, {0.1, 0.9, 0.7, 0.3})) == std::vector<std::size_t>{1, 0});
}

TEST_CASE("uniform weights reproduce mean prototypes") {
  std::mt19937_64 rng(7);
  for (std::uint64_t ep = 0; ep < 100; ++ep) {
    const std::size_t n = 2 + ep % 4;
    const std::size_t k = 1 + ep % 5;
    const auto groups = contiguous_groups(n, k);
    const auto z = random_matrix(n * k, 16, ep, 2.0);
    const auto q = random_matrix(7, 16, ep + 1000, 2.0);
    const double c = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto beta = support_weights<double>(std::vector<double>(n * k, c), groups);
    const auto pw = prototypes<double>(z, beta, groups, PrototypeStrategy::kWeighted);
    const auto pm = prototypes<double>(z, {}, groups, PrototypeStrategy::kMean);
    for (std::size_t i = 0; i < pw.size(); ++i) CHECK(std::abs(pw.values()[i] - pm.values()[i]) <= 1e-10);
    for (std::size_t r = 0; r < q.rows(); ++r) {
      const auto a = classify<double>(q.row(r), pw);
      const auto b = classify<double>(q.row(r), pm);
      for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(a[j] - b[j]) <= 1e-10);
      CHECK(std::max_element(a.begin(), a.end()) - a.begin() ==
            std::max_element(b.begin(), b.end()) - b.begin());
    }
  }
}

TEST_CASE("translating every embedding keeps class probabilities") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto groups = contiguous_groups(3, 4);
    const auto z = random_matrix(12, 5, seed);
    const auto q = random_matrix(4, 5, seed + 1);
    const auto shift = random_matrix(1, 5, seed + 2, 5.0);
    const auto beta = support_weights<double>(column(random_matrix(12, 1, seed + 3)), groups);
    auto zs = z;
    auto qs = q;
    for (std::size_t r = 0; r < zs.rows(); ++r) {
      for (std::size_t c = 0; c < 5; ++c) zs(r, c) += shift(0, c);
    }
    for (std::size_t r = 0; r < qs.rows(); ++r) {
      for (std::size_t c = 0; c < 5; ++c) qs(r, c) += shift(0, c);
    }
    const auto p = prototypes<double>(z, beta, groups, PrototypeStrategy::kWeighted);
    const auto ps = prototypes<double>(zs, beta, groups, PrototypeStrategy::kWeighted);
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t c = 0; c < 5; ++c) CHECK(std::abs(ps(r, c) - p(r, c) - shift(0, c)) < 1e-12);
    }
    for (std::size_t r = 0; r < 4; ++r) {
      const auto a = classify<double>(q.row(r), p);
      const auto b = classify<double>(qs.row(r), ps);
      double total = 0.0;
      for (std::size_t j = 0; j < 3; ++j) {
        CHECK(std::abs(a[j] - b[j]) < 1e-9);
        total += a[j];
      }
      CHECK(std::abs(total - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("taped pipeline agrees with the eager forms") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto groups = contiguous_groups(4, 3);
    const auto z = random_matrix(12, 6, seed);
    const auto q = random_matrix(8, 6, seed + 1);
    const auto s = random_matrix(12, 1, seed + 2);
    std::vector<std::size_t> labels(8);
    for (std::size_t i = 0; i < 8; ++i) labels[i] = i % 4;

    Tape<double> t;
    Var beta = support_weights(t, t.constant(s), groups);
    Var protos = prototypes(t, t.constant(z), beta, groups, PrototypeStrategy::kWeighted);
    Var logits = class_logits(t, t.constant(q), protos);
    Matrix<double> probs;
    Var loss = episode_loss(t, logits, labels, &probs);

    const auto eb = support_weights<double>(column(s), groups);
    const auto ep = prototypes<double>(z, eb, groups, PrototypeStrategy::kWeighted);
    for (std::size_t i = 0; i < 12; ++i) CHECK(std::abs(t.value(beta)(i, 0) - eb[i]) < 1e-14);
    for (std::size_t i = 0; i < ep.size(); ++i) {
      CHECK(std::abs(t.value(protos).values()[i] - ep.values()[i]) < 1e-13);
    }
    Matrix<double> eprobs(8, 4);
    for (std::size_t r = 0; r < 8; ++r) {
      const auto row = classify<double>(q.row(r), ep);
      std::copy(row.begin(), row.end(), eprobs.row(r).begin());
      for (std::size_t c = 0; c < 4; ++c) {
        CHECK(std::abs(probs(r, c) - row[c]) < 1e-12);
        CHECK(std::abs(t.value(logits)(r, c) + [&] {
                double d = 0.0;
                for (std::size_t k = 0; k < 6; ++k) d += (q(r, k) - ep(c, k)) * (q(r, k) - ep(c, k));
                return d;
              }()) < 1e-12);
      }
    }
    CHECK(t.value(loss)(0, 0) == doctest::Approx(episode_loss<double>(eprobs, labels)).epsilon(1e-12));
  }
}

TEST_CASE("prototype pipeline gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CAPTURE(seed);
    const auto groups = contiguous_groups(3, 2);
    Parameter<double> z("z", random_matrix(6, 4, seed));
    Parameter<double> q("q", random_matrix(5, 4, seed + 1));
    Parameter<double> s("s", random_matrix(6, 1, seed + 2));
    const std::vector<std::size_t> labels{0, 1, 2, 0, 1};
    auto loss = [&](bool grad) {
      Tape<double> t;
      Var beta = support_weights(t, t.parameter(s), groups);
      Var protos = prototypes(t, t.parameter(z), beta, groups, PrototypeStrategy::kWeighted);
      Var l = episode_loss(t, class_logits(t, t.parameter(q), protos), labels);
      if (grad) {
        for (auto* p : {&z, &q, &s}) p->zero_grad();
        t.backward(l);
      }
      return t.value(l)(0, 0);
    };
    loss(true);
    for (auto* p : {&z, &q, &s}) {
      const auto g = p->grad;
      for (std::size_t i = 0; i < p->value.size(); ++i) {
        const double fd = gpn::testing::central_difference([&] { return loss(false); },
                                                           p->value.values()[i], 1e-6);
        CHECK(gpn::testing::rel_error(g.values()[i], fd, 1e-3) < 1e-6);
      }
    }
  }
}

// Metrics.

namespace {

// Per-class counts from an explicit confusion matrix.
F1Scores confusion_f1(std::span<const std::size_t> preds, std::span<const std::size_t> labels,
                      std::size_t n) {
  std::vector<std::vector<double>> cm(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < preds.size(); ++i) cm[labels[i]][preds[i]] += 1.0;
  double tp_sum = 0.0;
  double fp_sum = 0.0;
  double fn_sum = 0.0;
  double macro = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    double row = 0.0;
    double col = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row += cm[c][j];
      col += cm[j][c];
    }
    const double tp = cm[c][c];
    const double fp = col - tp;
    const double fn = row - tp;
    tp_sum += tp;
    fp_sum += fp;
    fn_sum += fn;
    macro += (2 * tp + fp + fn) > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
  }
  return {2 * tp_sum / (2 * tp_sum + fp_sum + fn_sum), macro / static_cast<double>(n)};
}

}  // namespace

TEST_CASE("accuracy examples") {
  const std::vector<std::size_t> p{0, 1, 2};
  const std::vector<std::size_t> l{0, 1, 1};
  CHECK(accuracy(p, l) == doctest::Approx(2.0 / 3.0));
  CHECK(accuracy(l, l) == 1.0);
  CHECK(accuracy(std::vector<std::size_t>{1, 0}, std::vector<std::size_t>{0, 1}) == 0.0);
  CHECK(accuracy(std::vector<std::size_t>{0, 1, 1, 0}, std::vector<std::size_t>{0, 1, 0, 1}) == 0.5);
  CHECK_THROWS_AS(accuracy({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(accuracy(p, std::vector<std::size_t>{0}), std::invalid_argument);
}

TEST_CASE("F1 examples") {
  const std::vector<std::size_t> classes{0, 1};
  const std::vector<std::size_t> p{0, 0, 1};
  const std::vector<std::size_t> l{0, 1, 1};
  const auto perfect = f1_scores(l, l, classes);
  CHECK(perfect.micro == 1.0);
  CHECK(perfect.macro == 1.0);
  const auto f = f1_scores(p, l, classes);
  CHECK(f.micro == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(f.macro == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  // Class 2 never appears, class 1 only as a prediction.
  const std::vector<std::size_t> c3{0, 1, 2};
  const std::vector<std::size_t> p2{0, 1};
  const std::vector<std::size_t> l2{0, 0};
  const auto g = f1_scores(p2, l2, c3);
  CHECK(g.micro == doctest::Approx(0.5));
  CHECK(g.macro == doctest::Approx((2.0 / 3.0) / 3.0));
}

TEST_CASE("F1 agrees with a confusion-matrix oracle and micro equals accuracy") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + trial % 6;
    const std::size_t len = 1 + trial % 40;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> p(len);
    std::vector<std::size_t> l(len);
    for (std::size_t i = 0; i < len; ++i) {
      p[i] = pick(rng);
      l[i] = pick(rng);
    }
    std::vector<std::size_t> classes(n);
    std::iota(classes.begin(), classes.end(), 0);
    const auto f = f1_scores(p, l, classes);
    const auto o = confusion_f1(p, l, n);
    CHECK(std::abs(f.micro - o.micro) < 1e-12);
    CHECK(std::abs(f.macro - o.macro) < 1e-12);
    CHECK(std::abs(f.micro - accuracy(p, l)) < 1e-12);
  }
}

TEST_CASE("summaries and report serialization") {
  const std::vector<double> v{1, 2, 3, 4};
  const auto s = summarize(v);
  CHECK(s.mean == 2.5);
  CHECK(s.std == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
  CHECK(summarize(std::vector<double>{0.7}).std == 0.0);

  MetricReport r;
  r.n_way = 3;
  r.k_shot = 2;
  r.m_query = 4;
  r.num_tasks = 5;
  r.repeats = 3;
  r.strategy = "gpn";
  r.per_repeat = {{0.5, 0.5, 0.4}, {0.7, 0.7, 0.6}, {0.9, 0.9, 0.8}};
  r.summarize();
  CHECK(r.accuracy.mean == doctest::Approx(0.7));
  CHECK(r.accuracy.std == doctest::Approx(std::sqrt(0.08 / 3.0)));
  CHECK(r.macro_f1.mean == doctest::Approx(0.6));

  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j.at("n_way") == 3);
  CHECK(j.at("k_shot") == 2);
  CHECK(j.at("strategy") == "gpn");
  CHECK(j.at("per_repeat").size() == 3);
  CHECK(j.at("per_repeat")[2].at("repeat") == 2);
  CHECK(j.at("per_repeat")[1].at("accuracy").get<double>() == 0.7);
  CHECK(j.at("accuracy").at("mean").get<double>() == r.accuracy.mean);
  CHECK(j.at("micro_f1").at("std").get<double>() == r.micro_f1.std);

  const auto csv = r.to_csv();
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(csv.rfind("repeat,accuracy,micro_f1,macro_f1\n", 0) == 0);
  CHECK(csv.find("\n2,0.90000000000000002,") != std::string::npos);
}

TEST_CASE("similarity examples") {
  const Matrix<double> sup(2, 2, {0, 0, 1, 1});
  const Matrix<double> qry(1, 2, {3, 4});
  const auto sim = similarity_matrix(sup, qry);
  CHECK(sim(0, 0) == -5.0);
  CHECK(sim(1, 0) == doctest::Approx(-std::sqrt(13.0)));
  CHECK(similarity_matrix(sup, sup)(1, 1) == 0.0);
  const std::vector<std::string> rows{"0:10", "1:11"};
  const std::vector<std::string> cols{"0:12"};
  CHECK(similarity_csv(sim, rows, cols) == "support\\query,0:12\n0:10,-5\n1:11,-3.60555\n");
  CHECK_THROWS_AS(similarity_csv(sim, cols, cols), std::invalid_argument);
  CHECK_THROWS_AS(similarity_matrix(sup, Matrix<double>(1, 3)), std::invalid_argument);
}
