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

#ifndef QTRAJ_ENSEMBLE_HPP
#define QTRAJ_ENSEMBLE_HPP

#include "qtraj/sde.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace qtraj {

/// Draws an initial state from a seed derived from (base_seed, trajectory index).
using InitialSampler = std::function<PureState(std::uint64_t seed)>;

InitialSampler point_mass(PureState state);

class EnsembleFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EnsembleOptions {
  /// Keep every saved state (needed for arbitrary observables after the run).
  bool retain_states = true;
  /// Observables whose per-trajectory values are recorded even when states are dropped.
  std::vector<Op> tracked;
  int threads = 1;
};

/// Trajectories are reduced in fixed blocks of this many indices, so the reduction tree is a
/// function of M alone.
inline constexpr std::size_t kReductionBlock = 32;

struct TrajectoryBatch {
  SseKind kind = SseKind::linear;
  std::shared_ptr<const ModelSpec> model;
  TimeGrid grid{0.0, 1.0, 1};
  std::size_t M = 0;
  std::uint64_t base_seed = 0;
  std::vector<double> times;

  /// Sum over non-faulted trajectories of |psi><psi| at each save time.
  std::vector<Matrix> dyad_sums;
  /// [save][trajectory]
  std::vector<std::vector<double>> norms_sq;
  /// [save][trajectory]; empty unless states were retained.
  std::vector<std::vector<Vector>> states;
  std::vector<Op> tracked;
  /// [observable][save][trajectory]
  std::vector<std::vector<std::vector<Complex>>> tracked_values;

  std::vector<char> faulted;
  std::vector<std::string> fault_messages;
  std::size_t fault_count = 0;
  std::vector<double> mean_norm_drift;

  std::size_t M_effective() const { return M - fault_count; }
  bool has_states() const { return !states.empty(); }
  /// Save index of t; throws std::out_of_range when t is not a saved time.
  std::size_t save_index(double t) const;
};

TrajectoryBatch run_ensemble(const ModelSpec& model, const InitialSampler& initial, const TimeGrid& grid,
                             std::size_t M, std::uint64_t base_seed, SseKind kind,
                             const EnsembleOptions& options = {});

struct EnsembleDensity {
  double time = 0;
  Matrix matrix;
  std::size_t M_effective = 0;
  double stderr_scale = 0;
};

EnsembleDensity reconstruct_density(const TrajectoryBatch& batch, double t);

struct ObservableEstimate {
  Complex value;
  double stderr = 0;
  std::size_t M_effective = 0;
};

/// Mean and standard error of <psi_i, A psi_i> over the ensemble.
ObservableEstimate observable_mean(const TrajectoryBatch& batch, const Op& obs, double t);

/// Mean and standard error of ||psi_i||^2.
ObservableEstimate norm_mean(const TrajectoryBatch& batch, double t);

/// Sample mean and standard error of a sequence, summed in index order.
ObservableEstimate sample_mean(const std::vector<Complex>& values);
ObservableEstimate sample_mean(const std::vector<double>& values);

struct EquivalenceReport {
  double lhs = 0;
  double rhs = 0;
  double lhs_stderr = 0;
  double rhs_stderr = 0;
  double combined_stderr = 0;
  std::size_t linear_degenerate = 0;
  bool agrees() const { return std::abs(lhs - rhs) <= 3.0 * combined_stderr; }
};

struct EquivalenceOptions {
  double dt = 1e-3;
  int threads = 1;
};

/// Compares E[ ||X_t||^2 <X_t/||X_t||, f X_t/||X_t||> ] over linear trajectories with
/// E[<Y_t, f Y_t>] over an independent nonlinear ensemble started at the same unit vector.
EquivalenceReport weighted_equivalence_check(const ModelSpec& model, const PureState& x0, double t, std::size_t M,
                                             std::uint64_t base_seed, const Op& f_obs,
                                             const EquivalenceOptions& options = {});

/// Norms below this count as zero in the change-of-measure weight.
inline constexpr double kNormFloor = 1e-12;

/// Binary-counter pairwise summation; the tree depends only on the number of terms added.
class PairwiseSum {
 public:
  void add(Matrix m);
  Matrix total(Eigen::Index rows, Eigen::Index cols) const;
  bool empty() const { return stack_.empty(); }

 private:
  std::vector<std::pair<int, Matrix>> stack_;
};

/// Pairwise reduction of a fixed list of terms (left half + right half, recursively).
Matrix pairwise_reduce(const std::vector<Matrix>& terms, Eigen::Index rows, Eigen::Index cols);

}  // namespace qtraj

#endif  // QTRAJ_ENSEMBLE_HPP
