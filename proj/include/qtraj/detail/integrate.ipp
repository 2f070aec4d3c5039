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


#ifndef QTRAJ_DETAIL_INTEGRATE_IPP
#define QTRAJ_DETAIL_INTEGRATE_IPP

#include <cmath>
#include <vector>

namespace qtraj {

template <typename OnSave>
double integrate(const ModelSpec& model, Vector state, const TimeGrid& grid, SseKind kind, const NoiseStream& noise,
                 OnSave&& on_save) {
  if (state.size() != model.dim()) throw DimensionError("integrate: initial state has wrong dimension");
  if (kind == SseKind::nonlinear && std::abs(state.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("integrate: nonlinear kind requires a unit initial state");

  SseStepper stepper(model);
  std::vector<double> eta(stepper.channels());
  const double dt = grid.dt();
  double drift_sum = 0.0;

  on_save(std::size_t{0}, static_cast<const Vector&>(state));
  for (std::uint64_t step = 0; step < grid.steps(); ++step) {
    noise.fill(step, eta);
    if (kind == SseKind::linear) {
      stepper.step_linear(state, dt, eta);
      if (!state.allFinite()) throw IntegrationFault("non-finite state (dt too large or truncation blow-up)", step + 1);
    } else {
      const double pre = stepper.step_nonlinear(state, dt, eta);
      if (!std::isfinite(pre) || !state.allFinite())
        throw IntegrationFault("non-finite state (dt too large or truncation blow-up)", step + 1);
      if (pre < 0.25) throw IntegrationFault("norm fell below 0.5 before renormalization", step + 1);
      drift_sum += std::abs(pre - 1.0);
    }
    if (grid.is_save_step(step + 1))
      on_save(static_cast<std::size_t>((step + 1) / grid.save_every()), static_cast<const Vector&>(state));
  }
  return grid.steps() > 0 && kind == SseKind::nonlinear ? drift_sum / static_cast<double>(grid.steps()) : 0.0;
}

}  // namespace qtraj

#endif  // QTRAJ_DETAIL_INTEGRATE_IPP
