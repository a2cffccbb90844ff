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

#include <span>
#include <string>
#include <vector>

#include "gpn/tensor.hpp"

namespace gpn {

// Fraction of exact matches. Throws on empty or unequal-length input.
double accuracy(std::span<const std::size_t> preds, std::span<const std::size_t> labels);

struct F1Scores {
  double micro = 0.0;
  double macro = 0.0;
};

// Micro-F1 from pooled TP/FP/FN; macro-F1 as the unweighted mean of per-class
// F1 over `classes`. A class with no true and no predicted instances scores 0.
F1Scores f1_scores(std::span<const std::size_t> preds, std::span<const std::size_t> labels,
                   std::span<const std::size_t> classes);

struct RepeatMetrics {
  double accuracy = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
};

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation over repeats
};

struct MetricReport {
  std::size_t n_way = 0;
  std::size_t k_shot = 0;
  std::size_t m_query = 0;
  std::size_t num_tasks = 0;
  std::size_t repeats = 0;
  std::string strategy;
  std::vector<RepeatMetrics> per_repeat;
  MetricSummary accuracy;
  MetricSummary micro_f1;
  MetricSummary macro_f1;

  // Recomputes the three summaries from per_repeat.
  void summarize();
  std::string to_json() const;
  // One header row plus one row per repeat.
  std::string to_csv() const;
};

MetricSummary summarize(std::span<const double> values);

// Entry (i, j) = -||u_i - v_j|| (unsquared Euclidean).
Matrix<double> similarity_matrix(const Matrix<double>& support, const Matrix<double>& queries);

// Header row names the query (class:node) pairs; each row starts with the
// support pair. Values at 6 significant digits.
std::string similarity_csv(const Matrix<double>& sim, std::span<const std::string> row_names,
                           std::span<const std::string> col_names);

}  // namespace gpn
