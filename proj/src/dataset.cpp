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

#include "gpn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "gpn/error.hpp"
#include "gpn/random.hpp"
#include "json.hpp"

namespace gpn {

namespace fs = std::filesystem;

namespace {

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

[[noreturn]] void bad_line(const fs::path& path, std::size_t line, const std::string& what) {
  throw FormatError(path.filename().string() + ":" + std::to_string(line) + ": " + what);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(trim(line.substr(start, tab - start)));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view field, T& out) {
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<int> read_labels(const fs::path& path) {
  std::ifstream in = open_input(path);
  std::vector<int> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view f = trim(line);
    if (f.empty()) continue;
    int v = 0;
    if (!parse_number(f, v)) bad_line(path, lineno, "expected an integer class id");
    if (v < 0) bad_line(path, lineno, "negative class id");
    labels.push_back(v);
  }
  return labels;
}

Matrix<double> read_features(const fs::path& path) {
  std::ifstream in = open_input(path);
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_tabs(line);
    if (rows == 0) {
      cols = fields.size();
    } else if (fields.size() != cols) {
      bad_line(path, lineno,
               "expected " + std::to_string(cols) + " columns, found " +
                   std::to_string(fields.size()));
    }
    for (const auto f : fields) {
      double v = 0.0;
      if (!parse_number(f, v)) bad_line(path, lineno, "malformed number '" + std::string(f) + "'");
      if (!std::isfinite(v)) bad_line(path, lineno, "non-finite feature value");
      values.push_back(v);
    }
    ++rows;
  }
  return Matrix<double>(rows, cols, std::move(values));
}

std::vector<Edge> read_edges(const fs::path& path, std::size_t n) {
  std::ifstream in = open_input(path);
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 2) bad_line(path, lineno, "expected two tab-separated node ids");
    std::size_t u = 0;
    std::size_t v = 0;
    if (!parse_number(fields[0], u) || !parse_number(fields[1], v)) {
      bad_line(path, lineno, "malformed node id");
    }
    if (u >= n || v >= n) {
      bad_line(path, lineno,
               "node id " + std::to_string(std::max(u, v)) + " outside [0, " + std::to_string(n) +
                   ")");
    }
    edges.emplace_back(u, v);
  }
  return edges;
}

ClassSplits read_splits(const fs::path& path) {
  std::ifstream in = open_input(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.filename().string() + ": " + e.what());
  }
  if (!j.is_object()) throw FormatError(path.filename().string() + ": expected a JSON object");
  ClassSplits s;
  for (auto [key, dst] : {std::pair{"train", &s.train}, {"val", &s.val}, {"test", &s.test}}) {
    if (!j.contains(key) || !j[key].is_array()) {
      throw FormatError(path.filename().string() + ": missing array '" + key + "'");
    }
    for (const auto& v : j[key]) {
      if (!v.is_number_integer()) {
        throw FormatError(path.filename().string() + ": non-integer class id in '" + key + "'");
      }
      dst->push_back(v.get<int>());
    }
  }
  return s;
}

}  // namespace

void write_bundle(const DatasetBundle& bundle, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  {
    std::ofstream out = open_output(dir / kEdgesFile);
    for (const auto& [u, v] : bundle.edges) out << u << '\t' << v << '\n';
  }
  {
    std::ofstream out = open_output(dir / kFeaturesFile);
    const auto& x = bundle.features;
    std::string line;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      line.clear();
      for (std::size_t c = 0; c < x.cols(); ++c) {
        if (c > 0) line += '\t';
        line += format_double(x(i, c));
      }
      line += '\n';
      out << line;
    }
  }
  {
    std::ofstream out = open_output(dir / kLabelsFile);
    for (int l : bundle.labels) out << l << '\n';
  }
  {
    nlohmann::ordered_json j;
    j["train"] = bundle.splits.train;
    j["val"] = bundle.splits.val;
    j["test"] = bundle.splits.test;
    std::ofstream out = open_output(dir / kSplitsFile);
    out << j.dump() << '\n';
  }
}

DatasetBundle read_bundle(const fs::path& dir) {
  for (const char* name : {kEdgesFile, kFeaturesFile, kLabelsFile, kSplitsFile}) {
    if (!fs::exists(dir / name)) throw IoError("missing " + (dir / name).string());
  }
  DatasetBundle b;
  b.features = read_features(dir / kFeaturesFile);
  b.labels = read_labels(dir / kLabelsFile);
  if (b.features.rows() == 0) throw FormatError(std::string(kFeaturesFile) + ": no nodes");
  if (b.labels.size() != b.features.rows()) {
    throw FormatError(std::string(kLabelsFile) + " has " + std::to_string(b.labels.size()) +
                      " entries but " + kFeaturesFile + " has " +
                      std::to_string(b.features.rows()) + " rows");
  }
  b.edges = read_edges(dir / kEdgesFile, b.features.rows());
  b.splits = read_splits(dir / kSplitsFile);
  return b;
}

AttributedGraph load_dataset(const fs::path& dir, GraphOptions options) {
  DatasetBundle b = read_bundle(dir);
  try {
    return build_graph(b.edges, std::move(b.features), std::move(b.labels), std::move(b.splits),
                       options);
  } catch (const std::invalid_argument& e) {
    throw FormatError(dir.string() + ": " + e.what());
  }
}

DatasetStats dataset_stats(const AttributedGraph& g) {
  return {g.num_nodes(), g.num_edges(), g.feature_dim(), g.num_classes()};
}

void SbmSpec::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("SbmSpec: " + msg); };
  if (num_classes == 0 || nodes_per_class == 0) fail("needs at least one class and one node");
  if (feature_dim == 0) fail("feature_dim must be positive");
  if (!(p_out >= 0.0 && p_out <= p_in && p_in <= 1.0)) fail("requires 0 <= p_out <= p_in <= 1");
  if (!(noise_std >= 0.0) || !std::isfinite(class_mean_scale)) fail("bad feature scale");
  if (train_classes + val_classes + test_classes != num_classes) {
    fail("split counts must sum to num_classes");
  }
}

DatasetBundle generate_sbm(const SbmSpec& spec) {
  spec.validate();
  const std::size_t n = spec.num_classes * spec.nodes_per_class;
  DatasetBundle b;
  b.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) b.labels[i] = static_cast<int>(i / spec.nodes_per_class);

  Rng edge_rng(split_seed(spec.seed, 0));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      const double p = b.labels[u] == b.labels[v] ? spec.p_in : spec.p_out;
      if (unif(edge_rng) < p) b.edges.emplace_back(u, v);
    }
  }

  Rng centroid_rng(split_seed(spec.seed, 1));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix<double> centroids(spec.num_classes, spec.feature_dim);
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    double norm = 0.0;
    while (norm == 0.0) {
      norm = 0.0;
      for (auto& v : centroids.row(c)) {
        v = gauss(centroid_rng);
        norm += v * v;
      }
    }
    norm = std::sqrt(norm);
    for (auto& v : centroids.row(c)) v *= spec.class_mean_scale / norm;
  }

  Rng noise_rng(split_seed(spec.seed, 2));
  b.features = Matrix<double>(n, spec.feature_dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto mu = centroids.row(static_cast<std::size_t>(b.labels[i]));
    auto row = b.features.row(i);
    for (std::size_t c = 0; c < spec.feature_dim; ++c) row[c] = mu[c] + spec.noise_std * gauss(noise_rng);
  }

  Rng split_rng(split_seed(spec.seed, 3));
  std::vector<int> order(spec.num_classes);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), split_rng);
  auto take = [&](std::size_t from, std::size_t count) {
    std::vector<int> s(order.begin() + static_cast<std::ptrdiff_t>(from),
                       order.begin() + static_cast<std::ptrdiff_t>(from + count));
    std::sort(s.begin(), s.end());
    return s;
  };
  b.splits.train = take(0, spec.train_classes);
  b.splits.val = take(spec.train_classes, spec.val_classes);
  b.splits.test = take(spec.train_classes + spec.val_classes, spec.test_classes);
  return b;
}

}  // namespace gpn
