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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "gpn/tensor.hpp"

namespace gpn {

// Compressed sparse row matrix. Column indices are sorted within each row.
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_offsets{0};
  std::vector<std::uint32_t> col_indices;
  std::vector<double> values;

  std::size_t nnz() const { return col_indices.size(); }
  std::size_t row_begin(std::size_t r) const { return row_offsets[r]; }
  std::size_t row_end(std::size_t r) const { return row_offsets[r + 1]; }

  // Value at (r, c), zero when the entry is not stored.
  double at(std::size_t r, std::size_t c) const;

  // Throws std::invalid_argument if the CSR arrays are inconsistent.
  void validate() const;

  static SparseMatrix identity(std::size_t n);

  bool operator==(const SparseMatrix&) const = default;
};

using Edge = std::pair<std::size_t, std::size_t>;

struct ClassSplits {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
};

struct GraphOptions {
  // Centrality uses in-degree of the input edge list instead of undirected degree.
  bool directed = false;
};

class AttributedGraph {
 public:
  std::size_t num_nodes() const { return features_.rows(); }
  // Number of undirected edges after deduplication.
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t feature_dim() const { return features_.cols(); }
  std::size_t num_classes() const { return num_classes_; }

  const SparseMatrix& adjacency() const { return adjacency_; }
  const Matrix<double>& features() const { return features_; }
  const std::vector<double>& degrees() const { return degrees_; }
  const ClassSplits& splits() const { return splits_; }
  // Canonical (u < v), sorted, deduplicated.
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t dropped_self_loops() const { return dropped_self_loops_; }
  bool directed() const { return directed_; }

  // Every label read goes through here so that access can be audited.
  int label(std::size_t node) const;
  // Nodes carrying class `cls` in increasing id order; empty when absent.
  // Audited like label().
  const std::vector<std::size_t>& class_members(int cls) const;

 private:
  friend AttributedGraph build_graph(std::span<const Edge>, Matrix<double>, std::vector<int>,
                                     ClassSplits, GraphOptions);

  SparseMatrix adjacency_;
  Matrix<double> features_;
  std::vector<int> labels_;
  std::map<int, std::vector<std::size_t>> members_;
  std::vector<double> degrees_;
  std::vector<Edge> edges_;
  ClassSplits splits_;
  std::size_t num_classes_ = 0;
  std::size_t dropped_self_loops_ = 0;
  bool directed_ = false;
};

AttributedGraph build_graph(std::span<const Edge> edge_list, Matrix<double> features,
                            std::vector<int> labels, ClassSplits splits,
                            GraphOptions options = {});

// D^{-1/2} (A + I) D^{-1/2} with D the degree matrix of A + I.
SparseMatrix normalized_adjacency(const AttributedGraph& g);

// log(deg(i) + eps) per node.
std::vector<double> centrality(const AttributedGraph& g, double eps);

// Installs callbacks invoked on every AttributedGraph::label() (node id) and
// class_members() (class id) call made from the current thread, for the
// lifetime of the guard. Either callback may be empty.
class ScopedLabelObserver {
 public:
  explicit ScopedLabelObserver(std::function<void(std::size_t)> on_label,
                               std::function<void(int)> on_class = {});
  ~ScopedLabelObserver();
  ScopedLabelObserver(const ScopedLabelObserver&) = delete;
  ScopedLabelObserver& operator=(const ScopedLabelObserver&) = delete;

  struct Callbacks {
    std::function<void(std::size_t)> on_label;
    std::function<void(int)> on_class;
  };

 private:
  Callbacks callbacks_;
  const Callbacks* previous_;
};

}  // namespace gpn
