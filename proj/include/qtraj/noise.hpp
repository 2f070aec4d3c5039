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

#ifndef QTRAJ_NOISE_HPP
#define QTRAJ_NOISE_HPP

#include <array>
#include <cstdint>
#include <span>

namespace qtraj {

/// Philox4x32-10 block: a keyed bijection on 128-bit counters.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Uniform double in (0, 1] built from 53 random bits.
double bits_to_unit_interval(std::uint64_t bits);

/// Stateless source of standard normal increments. Each draw is a pure function of
/// (base_seed, trajectory_id, step, channel); nothing is carried between calls.
///
/// A stream with `coarsen = c` returns, at step j, the normalized sum of the base increments at
/// steps j*2^c ... (j+1)*2^c - 1. This is the Brownian increment of the coarse grid when the
/// fine grid uses dt / 2^c, so runs at different step sizes share one Brownian path.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t base_seed, std::uint64_t trajectory_id, int coarsen = 0);

  double normal(std::uint64_t step, std::uint32_t channel) const;
  void fill(std::uint64_t step, std::span<double> out) const;

  /// Uniform in (0,1] from a separate domain, used to draw initial states.
  double uniform(std::uint64_t index) const;

  std::uint64_t base_seed() const { return base_seed_; }
  std::uint64_t trajectory_id() const { return trajectory_id_; }
  int coarsen() const { return coarsen_; }

 private:
  double base_normal(std::uint64_t step, std::uint32_t channel) const;

  std::uint64_t base_seed_;
  std::uint64_t trajectory_id_;
  int coarsen_;
};

/// Deterministic 64-bit seed derived from (base, index, domain).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index, std::uint32_t domain = 0);

}  // namespace qtraj

#endif  // QTRAJ_NOISE_HPP
