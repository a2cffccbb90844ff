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

#include "gpn/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace gpn {

namespace {
std::atomic<int> g_level{static_cast<int>(LogLevel::kWarning)};
std::mutex g_mutex;

void emit(const char* tag, std::string_view msg) {
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << "[gpn] " << tag << ": " << msg << '\n';
}
}  // namespace

void set_log_level(LogLevel level) { g_level.store(static_cast<int>(level)); }
LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

void log_warning(std::string_view msg) {
  if (g_level.load() >= static_cast<int>(LogLevel::kWarning)) emit("warning", msg);
}

void log_info(std::string_view msg) {
  if (g_level.load() >= static_cast<int>(LogLevel::kInfo)) emit("info", msg);
}

}  // namespace gpn
