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

#include <filesystem>

#include "gpn/model.hpp"
#include "gpn/protonet.hpp"

namespace gpn {

// Binary layout, all integers and values little-endian:
//   "GPNPARAM"  u32 version  u32 strategy  u64 tensor count
//   per tensor: u32 name length, name bytes, u64 rows, u64 cols, f64 values
inline constexpr std::uint32_t kParamsVersion = 1;

struct SavedModel {
  ModelParams<double> params;
  PrototypeStrategy strategy = PrototypeStrategy::kWeighted;
};

void save_params(const std::filesystem::path& path, const ModelParams<double>& params,
                 PrototypeStrategy strategy);

// Throws IoError when unreadable and FormatError on bad magic, version,
// tensor names or inconsistent shapes.
SavedModel load_params(const std::filesystem::path& path);

}  // namespace gpn
