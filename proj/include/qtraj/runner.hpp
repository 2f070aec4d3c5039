// Copyright 2026 The qtraj Authors
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

#ifndef QTRAJ_RUNNER_HPP
#define QTRAJ_RUNNER_HPP

#include "qtraj/config.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qtraj {

inline constexpr const char* kToolVersion = "0.1.0";

struct TaskRecord {
  std::string task;
  double seconds = 0;
  std::size_t fault_count = 0;
  /// Empty when the task completed.
  std::string error;
};

struct RunManifest {
  std::string config_hash;
  std::string tool_version = kToolVersion;
  std::string output_dir;
  std::vector<std::string> files;
  std::vector<TaskRecord> tasks;

  bool faulted() const;
};

struct ExecuteOptions {
  std::optional<std::string> output_dir;
  std::optional<int> threads;
};

/// Runs the configured tasks in dependency order and writes every artifact plus manifest.json.
RunManifest execute(const RunConfig& config, const ExecuteOptions& options = {});

/// "%.17g"
std::string format_double(double x);

/// Header `# dim=<d>`, then `i,j,re,im` per entry in row-major order.
std::string matrix_dump(const Matrix& m);

}  // namespace qtraj

#endif  // QTRAJ_RUNNER_HPP
