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

#ifndef QTRAJ_SDE_HPP
#define QTRAJ_SDE_HPP

#include "qtraj/hilbert.hpp"
#include "qtraj/noise.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qtraj {

enum class SseKind { linear, nonlinear };

const char* to_string(SseKind kind);
SseKind parse_kind(const std::string& text);

struct PureState {
  Vector vec;
  double norm_sq = 0;

  PureState() = default;
  explicit PureState(Vector v) : vec(std::move(v)), norm_sq(vec.squaredNorm()) {}
  static PureState normalized(const Vector& v);
  Eigen::Index dim() const { return vec.size(); }
};

/// Uniform grid t_k = k dt for k = 0..steps; states are kept at every `save_every`-th step.
class TimeGrid {
 public:
  TimeGrid(double t_end, double dt, int save_every = 1);
  /// save_every chosen so that at most `max_saves` points are kept.
  static TimeGrid with_save_limit(double t_end, double dt, int max_saves = 1001);

  double t_end() const { return t_end_; }
  double dt() const { return dt_; }
  int save_every() const { return save_every_; }
  std::uint64_t steps() const { return steps_; }
  double time_at(std::uint64_t step) const { return static_cast<double>(step) * dt_; }
  bool is_save_step(std::uint64_t step) const { return step % static_cast<std::uint64_t>(save_every_) == 0; }
  std::vector<double> save_times() const;
  std::size_t save_count() const { return static_cast<std::size_t>(steps_ / save_every_) + 1; }
  /// Index into save_times() of t, or -1 when t is not a save time.
  long save_index(double t) const;
  TimeGrid refined() const;

 private:
  double t_end_;
  double dt_;
  int save_every_;
  std::uint64_t steps_;
};

/// Raised when a step produces non-finite entries or (nonlinear kind) loses more than half its norm.
class IntegrationFault : public std::runtime_error {
 public:
  IntegrationFault(const std::string& what, std::uint64_t step)
      : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}
  std::uint64_t step() const { return step_; }

 private:
  std::uint64_t step_;
};

struct Trajectory {
  SseKind kind = SseKind::linear;
  std::vector<std::pair<double, PureState>> saved_states;
  std::vector<std::pair<double, double>> norm_history;
  /// Mean over steps of | ||y'||^2 - 1 | before renormalization (nonlinear kind only).
  double mean_norm_drift = 0;
};

/// Reusable workspace for the Euler-Maruyama updates.
class SseStepper {
 public:
  explicit SseStepper(const ModelSpec& model);

  /// x' = x + G x dt + sum_k L_k x sqrt(dt) eta_k
  void step_linear(Vector& x, double dt, std::span<const double> eta);

  /// Euler-Maruyama update for the norm-preserving equation followed by renormalization.
  /// Returns ||y'||^2 before renormalization.
  double step_nonlinear(Vector& y, double dt, std::span<const double> eta);

  std::size_t channels() const { return model_.lindblads.size(); }

 private:
  const ModelSpec& model_;
  Vector gx_;
  std::vector<Vector> lx_;
  Vector next_;
};

PureState step_linear(const ModelSpec& model, const PureState& state, double dt, std::span<const double> eta);
PureState step_nonlinear(const ModelSpec& model, const PureState& state, double dt, std::span<const double> eta);

/// Drift map G(y) = G y + sum_k (l_k L_k y - l_k^2 y / 2), l_k = Re<y, L_k y>.
Vector nonlinear_drift(const ModelSpec& model, const Vector& y);
/// Diffusion map L_k(y) = L_k y - Re<y, L_k y> y.
Vector nonlinear_diffusion(const ModelSpec& model, std::size_t k, const Vector& y);

Trajectory simulate_trajectory(const ModelSpec& model, const PureState& initial, const TimeGrid& grid, SseKind kind,
                               const NoiseStream& noise);

/// Calls `on_save(save_index, state)` at every save step instead of storing the path.
/// Returns the mean pre-normalization drift (0 for the linear kind).
template <typename OnSave>
double integrate(const ModelSpec& model, Vector state, const TimeGrid& grid, SseKind kind, const NoiseStream& noise,
                 OnSave&& on_save);

}  // namespace qtraj

#include "qtraj/detail/integrate.ipp"

#endif  // QTRAJ_SDE_HPP
