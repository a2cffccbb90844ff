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

#include "gpn/params_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "gpn/error.hpp"

namespace gpn {

namespace {

constexpr std::array<char, 8> kMagic = {'G', 'P', 'N', 'P', 'A', 'R', 'A', 'M'};
// Guards against allocating from a corrupt header.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

template <typename U>
void put(std::ostream& out, U v) {
  std::array<char, sizeof(U)> buf;
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf.data(), buf.size());
}

template <typename U>
U get(std::istream& in, const std::string& what) {
  std::array<unsigned char, sizeof(U)> buf;
  if (!in.read(reinterpret_cast<char*>(buf.data()), buf.size())) {
    throw FormatError("truncated parameter file while reading " + what);
  }
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void save_params(const std::filesystem::path& path, const ModelParams<double>& params,
                 PrototypeStrategy strategy) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kParamsVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(strategy));
  const auto tensors = params.all();
  put<std::uint64_t>(out, tensors.size());
  for (const auto* p : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    put<std::uint64_t>(out, p->value.rows());
    put<std::uint64_t>(out, p->value.cols());
    for (double v : p->value.values()) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

SavedModel load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw FormatError(path.string() + ": not a parameter file (bad magic)");
  }
  const auto version = get<std::uint32_t>(in, "version");
  if (version != kParamsVersion) {
    throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
  }
  const auto strategy = get<std::uint32_t>(in, "strategy");
  if (strategy > static_cast<std::uint32_t>(PrototypeStrategy::kMean)) {
    throw FormatError(path.string() + ": unknown prototype strategy " + std::to_string(strategy));
  }

  SavedModel saved;
  saved.strategy = static_cast<PrototypeStrategy>(strategy);
  auto slots = saved.params.all();
  const auto count = get<std::uint64_t>(in, "tensor count");
  if (count != slots.size()) {
    throw FormatError(path.string() + ": expected " + std::to_string(slots.size()) +
                      " tensors, found " + std::to_string(count));
  }
  const char* expected[] = {"encoder.w0", "encoder.b0", "encoder.w1", "encoder.b1",
                            "valuator.w_s", "valuator.b_s", "valuator.a1", "valuator.a2"};
  for (std::size_t t = 0; t < slots.size(); ++t) {
    const auto len = get<std::uint32_t>(in, "name length");
    if (len > 256) throw FormatError(path.string() + ": implausible tensor name length");
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw FormatError(path.string() + ": truncated tensor name");
    if (name != expected[t]) {
      throw FormatError(path.string() + ": expected tensor '" + expected[t] + "', found '" +
                        name + "'");
    }
    const auto rows = get<std::uint64_t>(in, name + " rows");
    const auto cols = get<std::uint64_t>(in, name + " cols");
    if (rows == 0 || cols == 0 || rows * cols > kMaxElements) {
      throw FormatError(path.string() + ": bad shape for " + name);
    }
    Matrix<double> value(rows, cols);
    for (auto& v : value.values()) {
      v = std::bit_cast<double>(get<std::uint64_t>(in, name + " values"));
      if (!std::isfinite(v)) throw FormatError(path.string() + ": non-finite value in " + name);
    }
    *slots[t] = Parameter<double>(name, std::move(value));
  }
  if (in.peek() != std::ifstream::traits_type::eof()) {
    throw FormatError(path.string() + ": trailing bytes after last tensor");
  }

  const auto& p = saved.params;
  const std::size_t d = p.encoder.w0.value.rows();
  auto shape_is = [](const Parameter<double>& q, std::size_t r, std::size_t c) {
    return q.value.rows() == r && q.value.cols() == c;
  };
  if (!shape_is(p.encoder.w0, d, kHiddenDim) || !shape_is(p.encoder.b0, 1, kHiddenDim) ||
      !shape_is(p.encoder.w1, kHiddenDim, kEmbeddingDim) ||
      !shape_is(p.encoder.b1, 1, kEmbeddingDim) || !shape_is(p.valuator.w_s, d, 1) ||
      !shape_is(p.valuator.b_s, 1, 1) || !shape_is(p.valuator.a1, 2, 1) ||
      !shape_is(p.valuator.a2, 2, 1)) {
    throw FormatError(path.string() + ": tensor shapes do not match the architecture");
  }
  return saved;
}

}  // namespace gpn
