/**
 * Copyright 2026 The tractaug Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "tractaug/error.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

#include "tractaug/log.hpp"

namespace tractaug {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::GeometryMismatch: return "geometry mismatch";
    case ErrorCode::Io: return "I/O error";
    case ErrorCode::BadMagic: return "bad magic";
    case ErrorCode::UnsupportedDatatype: return "unsupported datatype";
    case ErrorCode::NotThreeD: return "non-3D image";
    case ErrorCode::Truncated: return "truncated file";
    case ErrorCode::Schema: return "schema violation";
    case ErrorCode::AugmentationExhausted: return "augmentation exhausted";
    case ErrorCode::Training: return "training failure";
  }
  return "unknown error";
}

namespace log {

namespace {
std::atomic<int> g_level{static_cast<int>(Level::Warn)};
std::mutex g_sink_mutex;
}  // namespace

void set_level(Level lvl) { g_level.store(static_cast<int>(lvl)); }
Level level() { return static_cast<Level>(g_level.load()); }

Level parse_level(std::string_view name) {
  if (name == "debug") return Level::Debug;
  if (name == "info") return Level::Info;
  if (name == "warn" || name == "warning") return Level::Warn;
  if (name == "error") return Level::Error;
  if (name == "off") return Level::Off;
  fail(ErrorCode::InvalidArgument, "unknown log level '" + std::string(name) + "'");
}

void write(Level lvl, const std::string& message) {
  static const char* tags[] = {"debug", "info", "warn", "error", "off"};
  std::lock_guard<std::mutex> lock(g_sink_mutex);
  std::cerr << "[tractaug " << tags[static_cast<int>(lvl)] << "] " << message << '\n';
}

}  // namespace log
}  // namespace tractaug
