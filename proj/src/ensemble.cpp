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

#include "qtraj/ensemble.hpp"

#include "qtraj/detail/parallel.hpp"

#include <cmath>
#include <sstream>

namespace qtraj {
namespace {

constexpr std::uint32_t kInitialDomain = 0x494E4954u;  // "INIT"
constexpr std::uint32_t kNonlinearDomain = 0x4E4C494Eu;

Matrix reduce_range(const std::vector<Matrix>& terms, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return terms[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return reduce_range(terms, lo, mid) + reduce_range(terms, mid, hi);
}

}  // namespace

InitialSampler point_mass(PureState state) {
  return [state = std::move(state)](std::uint64_t) { return state; };
}

void PairwiseSum::add(Matrix m) {
  stack_.emplace_back(0, std::move(m));
  while (stack_.size() >= 2 && stack_[stack_.size() - 1].first == stack_[stack_.size() - 2].first) {
    auto right = std::move(stack_.back());
    stack_.pop_back();
    stack_.back().second += right.second;
    ++stack_.back().first;
  }
}

Matrix PairwiseSum::total(Eigen::Index rows, Eigen::Index cols) const {
  if (stack_.empty()) return Matrix::Zero(rows, cols);
  Matrix acc = stack_.back().second;
  for (std::size_t i = stack_.size() - 1; i-- > 0;) acc = stack_[i].second + acc;
  return acc;
}

Matrix pairwise_reduce(const std::vector<Matrix>& terms, Eigen::Index rows, Eigen::Index cols) {
  if (terms.empty()) return Matrix::Zero(rows, cols);
  return reduce_range(terms, 0, terms.size());
}

std::size_t TrajectoryBatch::save_index(double t) const {
  const long idx = grid.save_index(t);
  if (idx < 0) {
    std::ostringstream os;
    os << "time " << t << " is not a saved time of this batch";
    throw std::out_of_range(os.str());
  }
  return static_cast<std::size_t>(idx);
}

TrajectoryBatch run_ensemble(const ModelSpec& model, const InitialSampler& initial, const TimeGrid& grid,
                             std::size_t M, std::uint64_t base_seed, SseKind kind, const EnsembleOptions& options) {
  if (M < 1) throw std::invalid_argument("run_ensemble: M must be >= 1");
  TrajectoryBatch batch;
  batch.kind = kind;
  batch.model = std::make_shared<const ModelSpec>(model);
  batch.grid = grid;
  batch.M = M;
  batch.base_seed = base_seed;
  batch.times = grid.save_times();
  batch.tracked = options.tracked;

  const std::size_t saves = batch.times.size();
  const Eigen::Index d = model.dim();
  batch.norms_sq.assign(saves, std::vector<double>(M, 0.0));
  if (options.retain_states) batch.states.assign(saves, std::vector<Vector>(M));
  batch.tracked_values.assign(options.tracked.size(),
                              std::vector<std::vector<Complex>>(saves, std::vector<Complex>(M)));
  batch.faulted.assign(M, 0);
  batch.mean_norm_drift.assign(M, 0.0);
  std::vector<std::string> messages(M);

  const std::size_t blocks = (M + kReductionBlock - 1) / kReductionBlock;
  std::vector<std::vector<Matrix>> block_sums(blocks);
  const ModelSpec& m = *batch.model;

  detail::parallel_blocks(blocks, options.threads, [&](std::size_t b) {
    std::vector<PairwiseSum> acc(saves);
    const std::size_t lo = b * kReductionBlock;
    const std::size_t hi = std::min(M, lo + kReductionBlock);
    std::vector<Vector> path(saves);
    for (std::size_t i = lo; i < hi; ++i) {
      const NoiseStream noise(base_seed, i);
      try {
        const PureState start = initial(derive_seed(base_seed, i, kInitialDomain));
        batch.mean_norm_drift[i] =
            integrate(m, start.vec, grid, kind, noise, [&](std::size_t s, const Vector& psi) { path[s] = psi; });
      } catch (const std::exception& e) {
        batch.faulted[i] = 1;
        messages[i] = "trajectory " + std::to_string(i) + ": " + e.what();
        continue;
      }
      for (std::size_t s = 0; s < saves; ++s) {
        const Vector& psi = path[s];
        batch.norms_sq[s][i] = psi.squaredNorm();
        for (std::size_t o = 0; o < options.tracked.size(); ++o)
          batch.tracked_values[o][s][i] = expectation(psi, options.tracked[o].matrix);
        acc[s].add(psi * psi.adjoint());
        if (options.retain_states) batch.states[s][i] = psi;
      }
    }
    block_sums[b].resize(saves);
    for (std::size_t s = 0; s < saves; ++s) block_sums[b][s] = acc[s].total(d, d);
  });

  batch.dyad_sums.resize(saves);
  for (std::size_t s = 0; s < saves; ++s) {
    std::vector<Matrix> terms(blocks);
    for (std::size_t b = 0; b < blocks; ++b) terms[b] = std::move(block_sums[b][s]);
    batch.dyad_sums[s] = pairwise_reduce(terms, d, d);
  }
  for (std::size_t i = 0; i < M; ++i) {
    if (!batch.faulted[i]) continue;
    ++batch.fault_count;
    batch.fault_messages.push_back(messages[i]);
  }
  if (batch.fault_count * 100 > M) {
    std::ostringstream os;
    os << "run_ensemble: " << batch.fault_count << " of " << M << " trajectories faulted";
    if (!batch.fault_messages.empty()) os << " (first: " << batch.fault_messages.front() << ")";
    throw EnsembleFault(os.str());
  }
  return batch;
}

EnsembleDensity reconstruct_density(const TrajectoryBatch& batch, double t) {
  const std::size_t s = batch.save_index(t);
  EnsembleDensity out;
  out.time = batch.times[s];
  out.M_effective = batch.M_effective();
  if (out.M_effective == 0) throw EnsembleFault("reconstruct_density: every trajectory faulted");
  out.matrix = hermitian_part(batch.dyad_sums[s] / static_cast<double>(out.M_effective));
  out.stderr_scale = 1.0 / std::sqrt(static_cast<double>(out.M_effective));
  return out;
}

ObservableEstimate sample_mean(const std::vector<Complex>& values) {
  ObservableEstimate est;
  est.M_effective = values.size();
  if (values.empty()) return est;
  Complex sum = 0;
  for (const auto& v : values) sum += v;
  const double n = static_cast<double>(values.size());
  est.value = sum / n;
  if (values.size() > 1) {
    double ss = 0;
    for (const auto& v : values) ss += std::norm(v - est.value);
    est.stderr = std::sqrt(ss / (n - 1.0) / n);
  }
  return est;
}

ObservableEstimate sample_mean(const std::vector<double>& values) {
  return sample_mean(std::vector<Complex>(values.begin(), values.end()));
}

ObservableEstimate observable_mean(const TrajectoryBatch& batch, const Op& obs, double t) {
  const std::size_t s = batch.save_index(t);
  if (obs.matrix.rows() != batch.model->dim()) throw DimensionError("observable_mean: shape mismatch");
  std::vector<Complex> values;
  values.reserve(batch.M_effective());
  if (batch.has_states()) {
    for (std::size_t i = 0; i < batch.M; ++i)
      if (!batch.faulted[i]) values.push_back(expectation(batch.states[s][i], obs.matrix));
  } else {
    std::size_t o = 0;
    for (; o < batch.tracked.size(); ++o)
      if (batch.tracked[o].label == obs.label && batch.tracked[o].matrix == obs.matrix) break;
    if (o == batch.tracked.size())
      throw std::invalid_argument("observable_mean: states were not retained and '" + obs.label + "' was not tracked");
    for (std::size_t i = 0; i < batch.M; ++i)
      if (!batch.faulted[i]) values.push_back(batch.tracked_values[o][s][i]);
  }
  ObservableEstimate est = sample_mean(values);
  if (batch.kind == SseKind::nonlinear && hermiticity_residual(obs.matrix) <= 1e-12)
    est.value = Complex(est.value.real(), 0.0);
  return est;
}

ObservableEstimate norm_mean(const TrajectoryBatch& batch, double t) {
  const std::size_t s = batch.save_index(t);
  std::vector<double> values;
  values.reserve(batch.M_effective());
  for (std::size_t i = 0; i < batch.M; ++i)
    if (!batch.faulted[i]) values.push_back(batch.norms_sq[s][i]);
  return sample_mean(values);
}

EquivalenceReport weighted_equivalence_check(const ModelSpec& model, const PureState& x0, double t, std::size_t M,
                                             std::uint64_t base_seed, const Op& f_obs,
                                             const EquivalenceOptions& options) {
  if (std::abs(std::sqrt(x0.norm_sq) - 1.0) > 1e-9)
    throw std::invalid_argument("weighted_equivalence_check: x0 must have unit norm");
  if (hermiticity_residual(f_obs.matrix) > 1e-12)
    throw std::invalid_argument("weighted_equivalence_check: observable must be Hermitian");

  const double steps = std::round(t / options.dt);
  const TimeGrid grid(t, options.dt, std::max(1, static_cast<int>(steps)));
  EnsembleOptions eo;
  eo.threads = options.threads;
  eo.retain_states = true;

  const auto linear = run_ensemble(model, point_mass(x0), grid, M, base_seed, SseKind::linear, eo);
  const auto nonlinear = run_ensemble(model, point_mass(x0), grid, M, derive_seed(base_seed, 0, kNonlinearDomain),
                                      SseKind::nonlinear, eo);
  const std::size_t s = grid.save_count() - 1;

  EquivalenceReport rep;
  std::vector<double> weighted;
  for (std::size_t i = 0; i < M; ++i) {
    if (linear.faulted[i]) continue;
    const Vector& x = linear.states[s][i];
    const double n2 = x.squaredNorm();
    if (n2 < kNormFloor) {
      ++rep.linear_degenerate;
      weighted.push_back(0.0);
      continue;
    }
    const Vector y = x / std::sqrt(n2);
    weighted.push_back(n2 * expectation(y, f_obs.matrix).real());
  }
  if (rep.linear_degenerate == weighted.size())
    throw EnsembleFault("weighted_equivalence_check: every linear trajectory has vanishing norm");

  std::vector<double> plain;
  for (std::size_t i = 0; i < M; ++i)
    if (!nonlinear.faulted[i]) plain.push_back(expectation(nonlinear.states[s][i], f_obs.matrix).real());

  const auto l = sample_mean(weighted);
  const auto r = sample_mean(plain);
  rep.lhs = l.value.real();
  rep.rhs = r.value.real();
  rep.lhs_stderr = l.stderr;
  rep.rhs_stderr = r.stderr;
  rep.combined_stderr = std::hypot(l.stderr, r.stderr);
  return rep;
}

}  // namespace qtraj
