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

#include "qtraj/noise.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qtraj {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

constexpr std::uint32_t kNormalDomain = 0x4E4F524Du;   // "NORM"
constexpr std::uint32_t kUniformDomain = 0x554E4946u;  // "UNIF"

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

std::array<std::uint32_t, 4> block(std::uint64_t seed, std::uint32_t domain, std::uint64_t traj,
                                   std::uint64_t step, std::uint32_t channel) {
  // Trajectory ids are folded with the domain into the high counter words; step fills the low ones.
  const std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                                         channel ^ static_cast<std::uint32_t>(traj >> 32) * 0x9E3779B1u,
                                         static_cast<std::uint32_t>(traj)};
  const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed),
                                         static_cast<std::uint32_t>(seed >> 32) ^ domain};
  return philox4x32(ctr, key);
}

double normal_from_block(const std::array<std::uint32_t, 4>& r) {
  const std::uint64_t b0 = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
  const std::uint64_t b1 = (static_cast<std::uint64_t>(r[2]) << 32) | r[3];
  const double u1 = bits_to_unit_interval(b0);
  const double u2 = bits_to_unit_interval(b1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

double bits_to_unit_interval(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

NoiseStream::NoiseStream(std::uint64_t base_seed, std::uint64_t trajectory_id, int coarsen)
    : base_seed_(base_seed), trajectory_id_(trajectory_id), coarsen_(coarsen) {
  if (coarsen < 0 || coarsen > 20) throw std::invalid_argument("NoiseStream: coarsen must be in [0, 20]");
}

double NoiseStream::base_normal(std::uint64_t step, std::uint32_t channel) const {
  return normal_from_block(block(base_seed_, kNormalDomain, trajectory_id_, step, channel));
}

double NoiseStream::normal(std::uint64_t step, std::uint32_t channel) const {
  if (coarsen_ == 0) return base_normal(step, channel);
  const std::uint64_t sub = std::uint64_t{1} << coarsen_;
  double sum = 0.0;
  for (std::uint64_t j = 0; j < sub; ++j) sum += base_normal(step * sub + j, channel);
  return sum / std::sqrt(static_cast<double>(sub));
}

void NoiseStream::fill(std::uint64_t step, std::span<double> out) const {
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = normal(step, static_cast<std::uint32_t>(k));
}

double NoiseStream::uniform(std::uint64_t index) const {
  const auto r = block(base_seed_, kUniformDomain, trajectory_id_, index, 0);
  return bits_to_unit_interval((static_cast<std::uint64_t>(r[0]) << 32) | r[1]);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index, std::uint32_t domain) {
  const auto r = block(base, domain ^ 0x53454544u, index, 0, 0);
  return (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
}

}  // namespace qtraj
