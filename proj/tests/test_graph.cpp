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
#include "gpn/graph.hpp"
#include "gpn/log.hpp"
#include "test_util.hpp"

using namespace gpn;
using gpn::testing::make_graph;

TEST_CASE("single edge is stored in both directions with value 1") {
  const auto g = make_graph(2, {{0, 1}});
  const auto& a = g.adjacency();
  CHECK(a.nnz() == 2);
  CHECK(a.at(0, 1) == 1.0);
  CHECK(a.at(1, 0) == 1.0);
  CHECK(a.at(0, 0) == 0.0);
  CHECK(g.num_edges() == 1);
}

TEST_CASE("duplicate and reversed edges collapse") {
  const auto g = make_graph(2, {{0, 1}, {1, 0}, {0, 1}});
  const auto ref = make_graph(2, {{0, 1}});
  CHECK(g.num_edges() == 1);
  CHECK(g.adjacency() == ref.adjacency());
}

TEST_CASE("triangle degrees") {
  const auto g = make_graph(3, {{0, 1}, {1, 2}, {0, 2}});
  CHECK(g.degrees() == std::vector<double>{2, 2, 2});
}

TEST_CASE("self loops are dropped and counted") {
  const auto g = make_graph(3, {{0, 0}, {0, 1}, {2, 2}});
  CHECK(g.dropped_self_loops() == 2);
  CHECK(g.num_edges() == 1);
  for (std::size_t i = 0; i < 3; ++i) CHECK(g.adjacency().at(i, i) == 0.0);
}

TEST_CASE("build_graph rejects invalid input") {
  ClassSplits s;
  s.train = {0};
  SUBCASE("edge out of range") {
    std::vector<Edge> e{{0, 5}};
    CHECK_THROWS_AS(build_graph(e, Matrix<double>(2, 1), {0, 0}, s), std::invalid_argument);
  }
  SUBCASE("label count mismatch") {
    CHECK_THROWS_AS(build_graph({}, Matrix<double>(2, 1), {0}, s), std::invalid_argument);
  }
  SUBCASE("non-finite feature") {
    Matrix<double> x(2, 1);
    x(1, 0) = std::nan("");
    CHECK_THROWS_AS(build_graph({}, x, {0, 0}, s), std::invalid_argument);
  }
  SUBCASE("overlapping splits") {
    ClassSplits bad;
    bad.train = {0};
    bad.test = {0};
    CHECK_THROWS_AS(build_graph({}, Matrix<double>(2, 1), {0, 0}, bad), std::invalid_argument);
  }
  SUBCASE("class without split") {
    CHECK_THROWS_AS(build_graph({}, Matrix<double>(2, 1), {0, 1}, s), std::invalid_argument);
  }
  SUBCASE("split names a missing class") {
    ClassSplits bad;
    bad.train = {0};
    bad.val = {3};
    CHECK_THROWS_AS(build_graph({}, Matrix<double>(2, 1), {0, 0}, bad), std::invalid_argument);
  }
  SUBCASE("negative label") {
    CHECK_THROWS_AS(build_graph({}, Matrix<double>(2, 1), {0, -1}, s), std::invalid_argument);
  }
}

TEST_CASE("normalized adjacency examples") {
  SUBCASE("isolated node") {
    const auto a = normalized_adjacency(make_graph(1, {}));
    CHECK(a.nnz() == 1);
    CHECK(a.at(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("two nodes one edge") {
    const auto a = normalized_adjacency(make_graph(2, {{0, 1}}));
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t j = 0; j < 2; ++j) CHECK(a.at(i, j) == doctest::Approx(0.5).epsilon(1e-15));
    }
  }
  SUBCASE("path 0-1-2") {
    const auto a = normalized_adjacency(make_graph(3, {{0, 1}, {1, 2}}));
    CHECK(std::abs(a.at(1, 1) - 1.0 / 3.0) < 1e-15);
    CHECK(std::abs(a.at(0, 1) - 1.0 / std::sqrt(6.0)) < 1e-15);
    CHECK(a.at(0, 2) == 0.0);
  }
}

TEST_CASE("regular graphs normalize to 1/(k+1)") {
  for (std::size_t n : {3u, 4u}) {
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) edges.emplace_back(i, j);
    }
    const auto a = normalized_adjacency(make_graph(n, edges));
    CHECK(a.nnz() == n * n);
    for (double v : a.values) CHECK(std::abs(v - 1.0 / static_cast<double>(n)) < 1e-15);
  }
}

TEST_CASE("normalized adjacency is symmetric and keeps the pattern of A plus I") {
  const auto g = gpn::testing::sbm_graph([] {
    SbmSpec s;
    s.num_classes = 4;
    s.train_classes = 4;
    s.val_classes = 0;
    s.test_classes = 0;
    s.nodes_per_class = 25;
    s.p_in = 0.2;
    s.p_out = 0.02;
    s.seed = 3;
    return s;
  }());
  const auto a = normalized_adjacency(g);
  a.validate();
  CHECK(a.nnz() == g.adjacency().nnz() + g.num_nodes());
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = a.row_begin(i); k < a.row_end(i); ++k) {
      const std::size_t j = a.col_indices[k];
      CHECK(std::abs(a.values[k] - a.at(j, i)) <= 1e-12);
      if (i != j) CHECK(g.adjacency().at(i, j) == 1.0);
    }
  }
}

TEST_CASE("CSR is invariant under edge list permutation") {
  std::mt19937_64 rng(11);
  std::vector<Edge> edges;
  std::uniform_int_distribution<std::size_t> pick(0, 39);
  for (int i = 0; i < 120; ++i) edges.emplace_back(pick(rng), pick(rng));
  std::erase_if(edges, [](const Edge& e) { return e.first == e.second; });
  const auto ref = make_graph(40, edges);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(edges.begin(), edges.end(), rng);
    for (auto& e : edges) {
      if (rng() & 1) std::swap(e.first, e.second);
    }
    const auto g = make_graph(40, edges);
    CHECK(g.adjacency() == ref.adjacency());
    CHECK(g.edges() == ref.edges());
  }
}

TEST_CASE("centrality examples") {
  SUBCASE("isolated node") {
    const auto c = centrality(make_graph(1, {}), 1e-6);
    CHECK(c[0] == doctest::Approx(-13.815510557964274).epsilon(1e-12));
  }
  SUBCASE("degree three") {
    const auto c = centrality(make_graph(4, {{0, 1}, {0, 2}, {0, 3}}), 1e-6);
    CHECK(c[0] == doctest::Approx(std::log(3.0 + 1e-6)).epsilon(1e-14));
    CHECK(c[0] == doctest::Approx(1.0986).epsilon(1e-4));
  }
  SUBCASE("deg + eps = 1 gives zero") {
    const auto c = centrality(make_graph(1, {}), 1.0);
    CHECK(c[0] == 0.0);
  }
  CHECK_THROWS_AS(centrality(make_graph(1, {}), 0.0), std::invalid_argument);
}

TEST_CASE("centrality is monotone in degree") {
  // Star plus path: degrees 0..5 all appear.
  const auto g = make_graph(12, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}, {6, 7}, {7, 8}, {8, 9}});
  const auto c = centrality(g, 1e-6);
  for (std::size_t i = 0; i < 12; ++i) {
    for (std::size_t j = 0; j < 12; ++j) {
      if (g.degrees()[i] <= g.degrees()[j]) CHECK(c[i] <= c[j]);
    }
  }
}

TEST_CASE("directed option uses in-degree") {
  ClassSplits s;
  s.train = {0};
  std::vector<Edge> e{{0, 1}, {2, 1}, {1, 0}};
  GraphOptions opt;
  opt.directed = true;
  const auto g = build_graph(e, Matrix<double>(3, 1), {0, 0, 0}, s, opt);
  CHECK(g.degrees() == std::vector<double>{1, 2, 0});
  CHECK(g.num_edges() == 2);
  const auto u = build_graph(e, Matrix<double>(3, 1), {0, 0, 0}, s);
  CHECK(u.degrees() == std::vector<double>{1, 2, 1});
}

TEST_CASE("label observer sees label and class-member reads") {
  const auto g = make_graph(3, {}, 1, {0, 1, 1});
  std::vector<std::size_t> nodes;
  std::vector<int> classes;
  {
    ScopedLabelObserver obs([&](std::size_t v) { nodes.push_back(v); },
                            [&](int c) { classes.push_back(c); });
    CHECK(g.label(2) == 1);
    CHECK(g.class_members(1) == std::vector<std::size_t>{1, 2});
  }
  CHECK(g.label(0) == 0);
  CHECK(nodes == std::vector<std::size_t>{2});
  CHECK(classes == std::vector<int>{1});
}

TEST_CASE("SparseMatrix validate catches broken CSR") {
  auto s = SparseMatrix::identity(3);
  s.validate();
  s.col_indices[1] = 7;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}
