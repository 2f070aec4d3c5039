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

#ifndef QTRAJ_CONFIG_HPP
#define QTRAJ_CONFIG_HPP

#include "qtraj/hilbert.hpp"
#include "qtraj/regularity.hpp"
#include "qtraj/sde.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qtraj {

/// Every problem found while validating a config, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

enum class Task { master_oracle, heisenberg_oracle, ensemble, duality, ehrenfest, equivalence, regularity,
                  dissipativity, stationary, picard };

const char* to_string(Task task);
/// All tasks in the order they execute.
const std::vector<Task>& task_order();

struct ModelConfig {
  std::string builder;
  int dim = 30;
  int p = 4;
  double rate = 1.0, nu = 0.5, omega = 0.0;
  KerrParams kerr;
  MonitoredParams monitored;
};

struct RunSection {
  std::vector<SseKind> kinds;
  std::string kind_text;
  std::size_t M = 1000;
  double dt = 1e-3;
  double t_end = 1.0;
  int save_every = 1;
  std::uint64_t base_seed = 0;
  std::string initial;
  std::vector<std::string> observables;
  int threads = 1;
};

struct RunConfig {
  ModelConfig model;
  RunSection run;
  std::vector<Task> tasks;  // dependency order
  std::string output_dir;

  double ehrenfest_dt = 1e-3;
  double equivalence_t = 1.0;
  InequalityKind dissipativity_kind = InequalityKind::hyp61;
  int dissipativity_probes = 64;
  std::optional<double> stationary_burn_in;
  double stationary_window = 20.0;
  std::optional<double> stationary_stride;
  std::size_t stationary_M = 500;
  double picard_t = 0.5;
  int picard_iters = 8;
  int picard_quad_points = 33;

  /// Every key with its effective value, defaults included.
  std::map<std::string, std::string> values;
  /// Keys whose values came from defaults.
  std::vector<std::string> defaults_applied;

  bool has_task(Task t) const;
  /// Sorted `key = value` lines.
  std::string canonical_text() const;
  /// FNV-1a 64 of canonical_text(), as 16 hex digits.
  std::string hash() const;
};

/// Parses flat `section.key = value` lines with `#` comments. Throws ConfigError listing
/// unknown keys, duplicates (with both line numbers), type errors, missing mandatory keys,
/// and unsatisfiable task prerequisites.
RunConfig parse_config(const std::string& text);

ModelSpec build_model(const ModelConfig& mc);
PureState build_initial_state(const FockSpace& space, const std::string& spec);
Op build_observable(const FockSpace& space, const std::string& name);

}  // namespace qtraj

#endif  // QTRAJ_CONFIG_HPP
