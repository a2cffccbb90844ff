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

#include "gpn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include "gpn/log.hpp"

namespace gpn {

namespace {

thread_local const ScopedLabelObserver::Callbacks* tl_label_observer = nullptr;

void check_disjoint(const std::vector<int>& a, const std::vector<int>& b, const char* na,
                    const char* nb) {
  for (int c : a) {
    if (std::find(b.begin(), b.end(), c) != b.end()) {
      throw std::invalid_argument("class " + std::to_string(c) + " appears in both the " + na +
                                  " and " + nb + " splits");
    }
  }
}

}  // namespace

double SparseMatrix::at(std::size_t r, std::size_t c) const {
  auto begin = col_indices.begin() + static_cast<std::ptrdiff_t>(row_offsets[r]);
  auto end = col_indices.begin() + static_cast<std::ptrdiff_t>(row_offsets[r + 1]);
  auto it = std::lower_bound(begin, end, static_cast<std::uint32_t>(c));
  if (it == end || *it != c) return 0.0;
  return values[static_cast<std::size_t>(it - col_indices.begin())];
}

void SparseMatrix::validate() const {
  if (row_offsets.size() != rows + 1 || row_offsets.front() != 0 ||
      row_offsets.back() != col_indices.size() || values.size() != col_indices.size()) {
    throw std::invalid_argument("SparseMatrix: inconsistent CSR array sizes");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    if (row_offsets[r] > row_offsets[r + 1]) {
      throw std::invalid_argument("SparseMatrix: row offsets decrease at row " + std::to_string(r));
    }
    for (std::size_t k = row_offsets[r]; k < row_offsets[r + 1]; ++k) {
      if (col_indices[k] >= cols) {
        throw std::invalid_argument("SparseMatrix: column index out of range in row " +
                                    std::to_string(r));
      }
      if (k > row_offsets[r] && col_indices[k] <= col_indices[k - 1]) {
        throw std::invalid_argument("SparseMatrix: column indices not strictly sorted in row " +
                                    std::to_string(r));
      }
    }
  }
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  SparseMatrix s;
  s.rows = s.cols = n;
  s.row_offsets.resize(n + 1);
  s.col_indices.resize(n);
  s.values.assign(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    s.row_offsets[i + 1] = i + 1;
    s.col_indices[i] = static_cast<std::uint32_t>(i);
  }
  return s;
}

int AttributedGraph::label(std::size_t node) const {
  if (tl_label_observer != nullptr && tl_label_observer->on_label) {
    tl_label_observer->on_label(node);
  }
  return labels_.at(node);
}

const std::vector<std::size_t>& AttributedGraph::class_members(int cls) const {
  static const std::vector<std::size_t> kNone;
  if (tl_label_observer != nullptr && tl_label_observer->on_class) {
    tl_label_observer->on_class(cls);
  }
  auto it = members_.find(cls);
  return it == members_.end() ? kNone : it->second;
}

ScopedLabelObserver::ScopedLabelObserver(std::function<void(std::size_t)> on_label,
                                         std::function<void(int)> on_class)
    : callbacks_{std::move(on_label), std::move(on_class)}, previous_(tl_label_observer) {
  tl_label_observer = &callbacks_;
}

ScopedLabelObserver::~ScopedLabelObserver() { tl_label_observer = previous_; }

AttributedGraph build_graph(std::span<const Edge> edge_list, Matrix<double> features,
                            std::vector<int> labels, ClassSplits splits, GraphOptions options) {
  const std::size_t n = features.rows();
  if (labels.size() != n) {
    throw std::invalid_argument("label count " + std::to_string(labels.size()) +
                                " does not match feature row count " + std::to_string(n));
  }
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (!std::isfinite(features.values()[i])) {
      throw std::invalid_argument("non-finite feature value at node " +
                                  std::to_string(i / std::max<std::size_t>(features.cols(), 1)));
    }
  }
  int max_label = -1;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0) {
      throw std::invalid_argument("negative label at node " + std::to_string(i));
    }
    max_label = std::max(max_label, labels[i]);
  }

  check_disjoint(splits.train, splits.val, "train", "val");
  check_disjoint(splits.train, splits.test, "train", "test");
  check_disjoint(splits.val, splits.test, "val", "test");
  std::set<int> present(labels.begin(), labels.end());
  std::set<int> assigned;
  for (const auto* s : {&splits.train, &splits.val, &splits.test}) {
    for (int c : *s) {
      if (!assigned.insert(c).second) {
        throw std::invalid_argument("class " + std::to_string(c) + " listed twice in one split");
      }
      if (present.count(c) == 0) {
        throw std::invalid_argument("split references class " + std::to_string(c) +
                                    " which no node carries");
      }
    }
  }
  for (int c : present) {
    if (assigned.count(c) == 0) {
      throw std::invalid_argument("class " + std::to_string(c) + " is not assigned to any split");
    }
  }

  AttributedGraph g;
  std::vector<Edge> canon;
  canon.reserve(edge_list.size());
  std::vector<double> in_degree(n, 0.0);
  std::vector<Edge> directed_edges;
  for (const auto& [u, v] : edge_list) {
    if (u >= n || v >= n) {
      throw std::invalid_argument("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                                  ") references a node outside [0, " + std::to_string(n) + ")");
    }
    if (u == v) {
      ++g.dropped_self_loops_;
      continue;
    }
    canon.emplace_back(std::min(u, v), std::max(u, v));
    if (options.directed) directed_edges.emplace_back(u, v);
  }
  if (g.dropped_self_loops_ > 0) {
    log_warning("dropped " + std::to_string(g.dropped_self_loops_) + " self-loop(s) from input");
  }
  std::sort(canon.begin(), canon.end());
  canon.erase(std::unique(canon.begin(), canon.end()), canon.end());

  SparseMatrix& a = g.adjacency_;
  a.rows = a.cols = n;
  a.row_offsets.assign(n + 1, 0);
  for (const auto& [u, v] : canon) {
    ++a.row_offsets[u + 1];
    ++a.row_offsets[v + 1];
  }
  for (std::size_t i = 0; i < n; ++i) a.row_offsets[i + 1] += a.row_offsets[i];
  a.col_indices.assign(a.row_offsets[n], 0);
  a.values.assign(a.row_offsets[n], 1.0);
  std::vector<std::size_t> cursor(a.row_offsets.begin(), a.row_offsets.end() - 1);
  for (const auto& [u, v] : canon) {
    a.col_indices[cursor[u]++] = static_cast<std::uint32_t>(v);
    a.col_indices[cursor[v]++] = static_cast<std::uint32_t>(u);
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(a.col_indices.begin() + static_cast<std::ptrdiff_t>(a.row_offsets[i]),
              a.col_indices.begin() + static_cast<std::ptrdiff_t>(a.row_offsets[i + 1]));
  }

  g.degrees_.resize(n);
  if (options.directed) {
    std::sort(directed_edges.begin(), directed_edges.end());
    directed_edges.erase(std::unique(directed_edges.begin(), directed_edges.end()),
                         directed_edges.end());
    for (const auto& e : directed_edges) in_degree[e.second] += 1.0;
    g.degrees_ = std::move(in_degree);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      g.degrees_[i] = static_cast<double>(a.row_offsets[i + 1] - a.row_offsets[i]);
    }
  }

  g.edges_ = std::move(canon);
  g.features_ = std::move(features);
  for (std::size_t i = 0; i < n; ++i) g.members_[labels[i]].push_back(i);
  g.labels_ = std::move(labels);
  g.splits_ = std::move(splits);
  g.num_classes_ = static_cast<std::size_t>(max_label + 1);
  g.directed_ = options.directed;
  return g;
}

SparseMatrix normalized_adjacency(const AttributedGraph& g) {
  const SparseMatrix& a = g.adjacency();
  const std::size_t n = a.rows;
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(a.row_end(i) - a.row_begin(i)) + 1.0);
  }
  SparseMatrix s;
  s.rows = s.cols = n;
  s.row_offsets.assign(n + 1, 0);
  s.col_indices.reserve(a.nnz() + n);
  s.values.reserve(a.nnz() + n);
  for (std::size_t i = 0; i < n; ++i) {
    bool diag_done = false;
    auto emit = [&](std::uint32_t j) {
      s.col_indices.push_back(j);
      s.values.push_back(inv_sqrt[i] * inv_sqrt[j]);
    };
    for (std::size_t k = a.row_begin(i); k < a.row_end(i); ++k) {
      std::uint32_t j = a.col_indices[k];
      if (!diag_done && j > i) {
        emit(static_cast<std::uint32_t>(i));
        diag_done = true;
      }
      emit(j);
    }
    if (!diag_done) emit(static_cast<std::uint32_t>(i));
    s.row_offsets[i + 1] = s.col_indices.size();
  }
  return s;
}

std::vector<double> centrality(const AttributedGraph& g, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("centrality eps must be positive");
  std::vector<double> c(g.num_nodes());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = std::log(g.degrees()[i] + eps);
  return c;
}

}  // namespace gpn
