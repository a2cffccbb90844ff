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

#include "gpn/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace gpn {

double accuracy(std::span<const std::size_t> preds, std::span<const std::size_t> labels) {
  if (preds.empty() || preds.size() != labels.size()) {
    throw std::invalid_argument("accuracy: predictions and labels must be nonempty and equal length");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

F1Scores f1_scores(std::span<const std::size_t> preds, std::span<const std::size_t> labels,
                   std::span<const std::size_t> classes) {
  if (preds.empty() || preds.size() != labels.size()) {
    throw std::invalid_argument("f1_scores: predictions and labels must be nonempty and equal length");
  }
  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0;
  };
  std::map<std::size_t, Counts> per_class;
  for (std::size_t c : classes) per_class[c];
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (per_class.find(labels[i]) == per_class.end()) {
      throw std::invalid_argument("f1_scores: label " + std::to_string(labels[i]) +
                                  " is not in the class set");
    }
    if (preds[i] == labels[i]) {
      ++per_class[labels[i]].tp;
    } else {
      ++per_class[labels[i]].fn;
      auto it = per_class.find(preds[i]);
      if (it != per_class.end()) ++it->second.fp;
    }
  }
  auto f1 = [](std::size_t tp, std::size_t fp, std::size_t fn) {
    const double denom = 2.0 * static_cast<double>(tp) + static_cast<double>(fp + fn);
    return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
  };
  // Pooled over all predictions: every wrong prediction is one FP and one FN.
  std::size_t tp = 0, wrong = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) (preds[i] == labels[i] ? tp : wrong) += 1;
  F1Scores out;
  out.micro = f1(tp, wrong, wrong);
  double sum = 0.0;
  for (const auto& [cls, c] : per_class) sum += f1(c.tp, c.fp, c.fn);
  out.macro = per_class.empty() ? 0.0 : sum / static_cast<double>(per_class.size());
  return out;
}

MetricSummary summarize(std::span<const double> values) {
  MetricSummary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

void MetricReport::summarize() {
  std::vector<double> acc, mi, ma;
  for (const auto& r : per_repeat) {
    acc.push_back(r.accuracy);
    mi.push_back(r.micro_f1);
    ma.push_back(r.macro_f1);
  }
  accuracy = gpn::summarize(acc);
  micro_f1 = gpn::summarize(mi);
  macro_f1 = gpn::summarize(ma);
}

std::string MetricReport::to_json() const {
  nlohmann::ordered_json j;
  j["n_way"] = n_way;
  j["k_shot"] = k_shot;
  j["m_query"] = m_query;
  j["num_tasks"] = num_tasks;
  j["repeats"] = repeats;
  j["strategy"] = strategy;
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < per_repeat.size(); ++i) {
    rows.push_back({{"repeat", i},
                    {"accuracy", per_repeat[i].accuracy},
                    {"micro_f1", per_repeat[i].micro_f1},
                    {"macro_f1", per_repeat[i].macro_f1}});
  }
  j["per_repeat"] = rows;
  auto summary = [](const MetricSummary& s) {
    return nlohmann::ordered_json{{"mean", s.mean}, {"std", s.std}};
  };
  j["accuracy"] = summary(accuracy);
  j["micro_f1"] = summary(micro_f1);
  j["macro_f1"] = summary(macro_f1);
  return j.dump(2);
}

std::string MetricReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "repeat,accuracy,micro_f1,macro_f1\n";
  for (std::size_t i = 0; i < per_repeat.size(); ++i) {
    os << i << ',' << per_repeat[i].accuracy << ',' << per_repeat[i].micro_f1 << ','
       << per_repeat[i].macro_f1 << '\n';
  }
  return os.str();
}

Matrix<double> similarity_matrix(const Matrix<double>& support, const Matrix<double>& queries) {
  if (support.cols() != queries.cols()) {
    throw std::invalid_argument("similarity_matrix: embedding dimensions differ (" +
                                std::to_string(support.cols()) + " vs " +
                                std::to_string(queries.cols()) + ")");
  }
  Matrix<double> out(support.rows(), queries.rows());
  for (std::size_t i = 0; i < support.rows(); ++i) {
    for (std::size_t j = 0; j < queries.rows(); ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < support.cols(); ++c) {
        const double d = support(i, c) - queries(j, c);
        acc += d * d;
      }
      out(i, j) = acc == 0.0 ? 0.0 : -std::sqrt(acc);
    }
  }
  return out;
}

std::string similarity_csv(const Matrix<double>& sim, std::span<const std::string> row_names,
                           std::span<const std::string> col_names) {
  if (row_names.size() != sim.rows() || col_names.size() != sim.cols()) {
    throw std::invalid_argument("similarity_csv: name count does not match matrix shape");
  }
  std::ostringstream os;
  os << "support\\query";
  for (const auto& c : col_names) os << ',' << c;
  os << '\n';
  char buf[32];
  for (std::size_t i = 0; i < sim.rows(); ++i) {
    os << row_names[i];
    for (std::size_t j = 0; j < sim.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.6g", sim(i, j));
      os << ',' << buf;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace gpn
