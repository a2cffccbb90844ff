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
#include <filesystem>
#include <string>
#include <vector>

#include "gpn/graph.hpp"
#include "gpn/tensor.hpp"

namespace gpn {

// On-disk layout of a dataset directory:
//   edges.tsv     two tab-separated node ids per line, one undirected edge
//   features.tsv  tab-separated reals, one node per line
//   labels.txt    one integer class id per line
//   splits.json   {"train": [...], "val": [...], "test": [...]}
inline constexpr const char* kEdgesFile = "edges.tsv";
inline constexpr const char* kFeaturesFile = "features.tsv";
inline constexpr const char* kLabelsFile = "labels.txt";
inline constexpr const char* kSplitsFile = "splits.json";

struct DatasetBundle {
  std::vector<Edge> edges;
  Matrix<double> features;
  std::vector<int> labels;
  ClassSplits splits;
};

// Creates `dir` if needed. Features are written in shortest round-trip form
// so reading them back reproduces every bit.
void write_bundle(const DatasetBundle& bundle, const std::filesystem::path& dir);

// Throws IoError for a missing or unreadable file and FormatError (with file
// name and line number) for malformed or mutually inconsistent content.
DatasetBundle read_bundle(const std::filesystem::path& dir);

// read_bundle followed by build_graph; graph invariant violations surface as
// FormatError.
AttributedGraph load_dataset(const std::filesystem::path& dir, GraphOptions options = {});

struct DatasetStats {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::size_t attributes = 0;
  std::size_t labels = 0;
};

DatasetStats dataset_stats(const AttributedGraph& g);

struct SbmSpec {
  std::size_t num_classes = 10;
  std::size_t nodes_per_class = 60;
  double p_in = 0.1;
  double p_out = 0.005;
  std::size_t feature_dim = 32;
  double class_mean_scale = 1.0;
  double noise_std = 0.5;
  std::size_t train_classes = 5;
  std::size_t val_classes = 2;
  std::size_t test_classes = 3;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument for degenerate or inconsistent settings.
  void validate() const;
};

// Stochastic block model with Gaussian class-centroid features. Node i
// belongs to class i / nodes_per_class. Class ids are assigned to splits by
// a seeded permutation.
DatasetBundle generate_sbm(const SbmSpec& spec);

}  // namespace gpn
