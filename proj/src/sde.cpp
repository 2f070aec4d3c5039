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

#include "qtraj/sde.hpp"

#include <cmath>

namespace qtraj {

const char* to_string(SseKind kind) { return kind == SseKind::linear ? "linear" : "nonlinear"; }

SseKind parse_kind(const std::string& text) {
  if (text == "linear") return SseKind::linear;
  if (text == "nonlinear") return SseKind::nonlinear;
  throw std::invalid_argument("unknown SSE kind '" + text + "'");
}

PureState PureState::normalized(const Vector& v) {
  const double n = v.norm();
  if (!(n > 0)) throw std::invalid_argument("PureState::normalized: zero vector");
  return PureState(v / n);
}

TimeGrid::TimeGrid(double t_end, double dt, int save_every) : t_end_(t_end), dt_(dt), save_every_(save_every) {
  if (!(t_end >= 0) || !std::isfinite(t_end)) throw std::invalid_argument("TimeGrid: t_end must be >= 0");
  if (!(dt > 0) || !std::isfinite(dt)) throw std::invalid_argument("TimeGrid: dt must be > 0");
  if (save_every < 1) throw std::invalid_argument("TimeGrid: save_every must be >= 1");
  const double ratio = t_end / dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
    throw std::invalid_argument("TimeGrid: t_end/dt must be an integer");
  steps_ = static_cast<std::uint64_t>(rounded);
  if (steps_ % static_cast<std::uint64_t>(save_every) != 0)
    throw std::invalid_argument("TimeGrid: save_every must divide the step count");
}

TimeGrid TimeGrid::with_save_limit(double t_end, double dt, int max_saves) {
  TimeGrid probe(t_end, dt, 1);
  const std::uint64_t intervals = static_cast<std::uint64_t>(std::max(1, max_saves - 1));
  std::uint64_t every = std::max<std::uint64_t>(1, (probe.steps() + intervals - 1) / intervals);
  while (probe.steps() > 0 && probe.steps() % every != 0) ++every;
  return TimeGrid(t_end, dt, static_cast<int>(every));
}

std::vector<double> TimeGrid::save_times() const {
  std::vector<double> out;
  out.reserve(save_count());
  for (std::uint64_t s = 0; s <= steps_; s += static_cast<std::uint64_t>(save_every_)) out.push_back(time_at(s));
  return out;
}

long TimeGrid::save_index(double t) const {
  const double tol = 1e-9 * std::max(1.0, std::abs(t));
  const double k = std::round(t / (dt_ * save_every_));
  if (k < 0 || static_cast<std::size_t>(k) >= save_count()) return -1;
  const auto step = static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(save_every_);
  return std::abs(time_at(step) - t) <= tol ? static_cast<long>(k) : -1;
}

TimeGrid TimeGrid::refined() const { return TimeGrid(t_end_, dt_ / 2.0, save_every_ * 2); }

SseStepper::SseStepper(const ModelSpec& model)
    : model_(model), gx_(model.dim()), lx_(model.lindblads.size(), Vector(model.dim())), next_(model.dim()) {}

void SseStepper::step_linear(Vector& x, double dt, std::span<const double> eta) {
  if (eta.size() != lx_.size()) throw DimensionError("step_linear: one increment per channel required");
  const double sq = std::sqrt(dt);
  next_.noalias() = model_.drift.matrix * x;
  next_ *= dt;
  next_ += x;
  for (std::size_t k = 0; k < lx_.size(); ++k) {
    lx_[k].noalias() = model_.lindblads[k].matrix * x;
    next_ += (sq * eta[k]) * lx_[k];
  }
  x.swap(next_);
}

double SseStepper::step_nonlinear(Vector& y, double dt, std::span<const double> eta) {
  if (eta.size() != lx_.size()) throw DimensionError("step_nonlinear: one increment per channel required");
  const double sq = std::sqrt(dt);
  gx_.noalias() = model_.drift.matrix * y;
  // next = y + dt * G(y) + sqrt(dt) * sum_k eta_k L_k(y)
  next_ = y + dt * gx_;
  for (std::size_t k = 0; k < lx_.size(); ++k) {
    lx_[k].noalias() = model_.lindblads[k].matrix * y;
    const double ell = y.dot(lx_[k]).real();
    next_ += (dt * ell + sq * eta[k]) * lx_[k];
    next_ -= (0.5 * dt * ell * ell + sq * eta[k] * ell) * y;
  }
  y.swap(next_);
  const double pre = y.squaredNorm();
  if (pre > 0 && std::isfinite(pre)) y /= std::sqrt(pre);
  return pre;
}

PureState step_linear(const ModelSpec& model, const PureState& state, double dt, std::span<const double> eta) {
  SseStepper stepper(model);
  Vector x = state.vec;
  stepper.step_linear(x, dt, eta);
  if (!x.allFinite()) throw IntegrationFault("non-finite state (dt too large or truncation blow-up)", 0);
  return PureState(std::move(x));
}

PureState step_nonlinear(const ModelSpec& model, const PureState& state, double dt, std::span<const double> eta) {
  if (std::abs(std::sqrt(state.norm_sq) - 1.0) > 1e-9)
    throw std::invalid_argument("step_nonlinear: state must have unit norm");
  SseStepper stepper(model);
  Vector y = state.vec;
  const double pre = stepper.step_nonlinear(y, dt, eta);
  if (!std::isfinite(pre) || !y.allFinite())
    throw IntegrationFault("non-finite state (dt too large or truncation blow-up)", 0);
  if (pre < 0.25) throw IntegrationFault("norm fell below 0.5 before renormalization", 0);
  return PureState(std::move(y));
}

Vector nonlinear_drift(const ModelSpec& model, const Vector& y) {
  Vector out = model.drift.matrix * y;
  for (const auto& l : model.lindblads) {
    const Vector ly = l.matrix * y;
    const double ell = y.dot(ly).real();
    out += ell * ly - (0.5 * ell * ell) * y;
  }
  return out;
}

Vector nonlinear_diffusion(const ModelSpec& model, std::size_t k, const Vector& y) {
  const Vector ly = model.lindblads.at(k).matrix * y;
  return ly - y.dot(ly).real() * y;
}

Trajectory simulate_trajectory(const ModelSpec& model, const PureState& initial, const TimeGrid& grid, SseKind kind,
                               const NoiseStream& noise) {
  Trajectory traj;
  traj.kind = kind;
  traj.saved_states.reserve(grid.save_count());
  traj.norm_history.reserve(grid.save_count());
  traj.mean_norm_drift = integrate(model, initial.vec, grid, kind, noise, [&](std::size_t idx, const Vector& s) {
    const double t = grid.time_at(static_cast<std::uint64_t>(idx) * grid.save_every());
    PureState ps(s);
    traj.norm_history.emplace_back(t, std::sqrt(ps.norm_sq));
    traj.saved_states.emplace_back(t, std::move(ps));
  });
  return traj;
}

}  // namespace qtraj
