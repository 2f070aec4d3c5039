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

#ifndef QTRAJ_STATIONARY_HPP
#define QTRAJ_STATIONARY_HPP

#include "qtraj/ensemble.hpp"

#include <optional>

namespace qtraj {

struct StationaryOptions {
  double burn_in = 5.0;
  double window = 20.0;
  /// Spacing of the time samples inside the window; defaults to 10 dt.
  std::optional<double> sample_stride;
  std::size_t M = 500;
  std::uint64_t base_seed = 0;
  double dt = 1e-3;
  int threads = 1;
  /// Operator whose second moment is reported as c_moment; defaults to the model's reference C.
  std::optional<Op> c_op;
  /// Generator residual below which the estimate is called converged.
  double residual_tolerance = 0.05;
};

struct WindowSplit {
  int power = 1;  // k in tr(N^k rho)
  double first = 0, second = 0, combined_stderr = 0;
  bool consistent() const { return std::abs(first - second) <= 3.0 * combined_stderr; }
};

struct StationaryEstimate {
  DensityMatrix rho_inf{Matrix::Identity(2, 2) / 2.0};
  double burn_in = 0;
  double window = 0;
  std::size_t M = 0;
  std::size_t samples_per_trajectory = 0;
  double residual_onenorm = 0;
  double c_moment = 0;
  double c_moment_stderr = 0;
  double number_mean = 0;    // tr(N rho_inf)
  double number_stderr = 0;  // batch means over trajectories
  std::vector<WindowSplit> window_split;
  /// Parameters satisfy the Kerr stationarity predicate (false when the model carries none).
  bool certified = false;
  bool converged = false;

  bool window_split_consistent() const;
};

/// Time and ensemble average of |Y_t><Y_t| over [burn_in, burn_in + window].
StationaryEstimate estimate_stationary(const ModelSpec& model, const PureState& y0, const StationaryOptions& options);

/// 5 / (smallest nonzero decay rate); requires dim <= kExpmDimLimit.
double default_burn_in(const ModelSpec& model);

struct StationaryResidual {
  double generator = 0;    // ||L_*(rho)||_1
  double finite_time = 0;  // ||rho_t(rho) - rho||_1
  double t_check = 0;
};

StationaryResidual stationary_residual(const ModelSpec& model, const DensityMatrix& rho, double t_check = 1.0);

}  // namespace qtraj

#endif  // QTRAJ_STATIONARY_HPP
