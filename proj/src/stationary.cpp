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

#include "qtraj/stationary.hpp"

#include "qtraj/detail/parallel.hpp"
#include "qtraj/oracle.hpp"
#include "qtraj/regularity.hpp"

#include <cmath>

namespace qtraj {
namespace {

struct TrajectoryAverage {
  Matrix rho;
  double c_moment = 0;
  double n_half[2][2] = {{0, 0}, {0, 0}};  // [power-1][half]
  bool faulted = false;
};

long steps_of(double t, double dt, const char* what) {
  const double r = t / dt;
  if (std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, r))
    throw std::invalid_argument(std::string("estimate_stationary: ") + what + " must be a multiple of dt");
  return std::lround(r);
}

}  // namespace

bool StationaryEstimate::window_split_consistent() const {
  for (const auto& w : window_split)
    if (!w.consistent()) return false;
  return true;
}

double default_burn_in(const ModelSpec& model) {
  const double gap = spectral_gap(model);
  if (!(gap > 0)) throw std::invalid_argument("default_burn_in: model has no decaying modes");
  return 5.0 / gap;
}

StationaryEstimate estimate_stationary(const ModelSpec& model, const PureState& y0, const StationaryOptions& opt) {
  if (!(opt.burn_in > 0) || !(opt.window > 0)) throw std::invalid_argument("estimate_stationary: burn_in and window must be > 0");
  if (opt.M < 1) throw std::invalid_argument("estimate_stationary: M must be >= 1");
  const double stride = opt.sample_stride.value_or(10.0 * opt.dt);
  const long stride_steps = steps_of(stride, opt.dt, "sample_stride");
  const long burn_steps = steps_of(opt.burn_in, opt.dt, "burn_in");
  const long window_steps = steps_of(opt.window, opt.dt, "window");
  if (stride_steps < 1 || burn_steps % stride_steps != 0 || window_steps % stride_steps != 0)
    throw std::invalid_argument("estimate_stationary: burn_in and window must be multiples of sample_stride");

  const TimeGrid grid(opt.burn_in + opt.window, opt.dt, static_cast<int>(stride_steps));
  const std::size_t first_sample = static_cast<std::size_t>(burn_steps / stride_steps);
  const std::size_t last_sample = grid.save_count() - 1;
  const std::size_t midpoint = first_sample + (last_sample - first_sample + 1) / 2;
  const std::size_t samples = last_sample - first_sample + 1;

  const Op c_op = opt.c_op.value_or(model.reference);
  const Matrix n = build_fock_ops(model.space).n.matrix;
  const Eigen::Index d = model.dim();

  std::vector<TrajectoryAverage> per(opt.M);
  const std::size_t blocks = (opt.M + kReductionBlock - 1) / kReductionBlock;
  detail::parallel_blocks(blocks, opt.threads, [&](std::size_t b) {
    const std::size_t lo = b * kReductionBlock, hi = std::min(opt.M, lo + kReductionBlock);
    for (std::size_t i = lo; i < hi; ++i) {
      TrajectoryAverage& avg = per[i];
      PairwiseSum acc;
      std::size_t counts[2] = {0, 0};
      double c_sum = 0;
      try {
        integrate(model, y0.vec, grid, SseKind::nonlinear, NoiseStream(opt.base_seed, i),
                  [&](std::size_t s, const Vector& y) {
                    if (s < first_sample) return;
                    acc.add(y * y.adjoint());
                    c_sum += (c_op.matrix * y).squaredNorm();
                    const int half = s < midpoint ? 0 : 1;
                    const Vector ny = n * y;
                    avg.n_half[0][half] += y.dot(ny).real();
                    avg.n_half[1][half] += ny.squaredNorm();
                    ++counts[half];
                  });
      } catch (const IntegrationFault&) {
        avg.faulted = true;
        continue;
      }
      avg.rho = acc.total(d, d) / static_cast<double>(samples);
      avg.c_moment = c_sum / static_cast<double>(samples);
      for (int k = 0; k < 2; ++k)
        for (int h = 0; h < 2; ++h) avg.n_half[k][h] /= static_cast<double>(std::max<std::size_t>(1, counts[h]));
    }
  });

  std::vector<Matrix> block_terms;
  std::vector<double> c_vals, n_vals;
  std::vector<double> halves[2][2];
  std::size_t faults = 0;
  for (std::size_t b = 0; b < blocks; ++b) {
    PairwiseSum acc;
    const std::size_t lo = b * kReductionBlock, hi = std::min(opt.M, lo + kReductionBlock);
    for (std::size_t i = lo; i < hi; ++i) {
      if (per[i].faulted) {
        ++faults;
        continue;
      }
      acc.add(per[i].rho);
      c_vals.push_back(per[i].c_moment);
      n_vals.push_back(per[i].rho.cwiseProduct(n.transpose()).sum().real());
      for (int k = 0; k < 2; ++k)
        for (int h = 0; h < 2; ++h) halves[k][h].push_back(per[i].n_half[k][h]);
    }
    block_terms.push_back(acc.total(d, d));
  }
  if (faults * 100 > opt.M) throw EnsembleFault("estimate_stationary: more than 1% of trajectories faulted");
  const std::size_t m_eff = opt.M - faults;

  StationaryEstimate est;
  Matrix rho = hermitian_part(pairwise_reduce(block_terms, d, d) / static_cast<double>(m_eff));
  rho /= rho.trace().real();
  est.rho_inf = DensityMatrix(std::move(rho));
  est.burn_in = opt.burn_in;
  est.window = opt.window;
  est.M = m_eff;
  est.samples_per_trajectory = samples;
  est.residual_onenorm = trace_norm(hermitian_part(lindbladian_apply(model, est.rho_inf.matrix())));
  const auto c = sample_mean(c_vals);
  est.c_moment = c.value.real();
  est.c_moment_stderr = c.stderr;
  const auto nm = sample_mean(n_vals);
  est.number_mean = nm.value.real();
  est.number_stderr = nm.stderr;
  for (int k = 0; k < 2; ++k) {
    const auto a = sample_mean(halves[k][0]);
    const auto b = sample_mean(halves[k][1]);
    est.window_split.push_back({k + 1, a.value.real(), b.value.real(), std::hypot(a.stderr, b.stderr)});
  }
  if (model.kerr) {
    const auto& kp = *model.kerr;
    est.certified = kp.p >= 4 && kerr_stationary_predicate(kp.alpha[0], kp.alpha[1], kp.alpha[3], kp.alpha[4], kp.p);
  }
  est.converged = est.residual_onenorm <= opt.residual_tolerance && est.window_split_consistent();
  return est;
}

StationaryResidual stationary_residual(const ModelSpec& model, const DensityMatrix& rho, double t_check) {
  StationaryResidual r;
  r.t_check = t_check;
  r.generator = trace_norm(hermitian_part(lindbladian_apply(model, rho.matrix())));
  r.finite_time = trace_norm(hermitian_part(propagate_master(model, rho.matrix(), t_check) - rho.matrix()));
  return r;
}

}  // namespace qtraj
