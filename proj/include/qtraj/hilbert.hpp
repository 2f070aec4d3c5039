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

#ifndef QTRAJ_HILBERT_HPP
#define QTRAJ_HILBERT_HPP

#include "qtraj/linalg.hpp"

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qtraj {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Span of the first `dim` number states e_0, ..., e_{dim-1}.
class FockSpace {
 public:
  explicit FockSpace(int dim);
  int dim() const { return dim_; }
  Vector basis(int n) const;

 private:
  int dim_;
};

struct Op {
  Matrix matrix;
  std::string label;

  Eigen::Index dim() const { return matrix.rows(); }
  Op adjoint() const { return {matrix.adjoint(), label + "^*"}; }
};

struct FockOperators {
  Op a, adag, n, q, p;
};

FockOperators build_fock_ops(const FockSpace& space);

/// Parameters of the driven Kerr oscillator with six dissipation channels.
struct KerrParams {
  double beta1 = 0, beta2 = 0, beta3 = 0;
  std::array<Complex, 6> alpha{};
  int p = 4;
};

struct MonitoredParams {
  double m = 1, c = 0, alpha = 0, beta = 0;
};

/// (H, {L_k}, G, C) on a truncated space. `drift` is public so diagnostics can be exercised
/// against a deliberately inconsistent model.
struct ModelSpec {
  FockSpace space{2};
  Op hamiltonian;
  std::vector<Op> lindblads;
  Op drift;
  Op reference;
  int interior_cutoff = 1;
  std::string name;
  std::optional<KerrParams> kerr;
  std::optional<MonitoredParams> monitored;

  int dim() const { return space.dim(); }
  std::size_t channels() const { return lindblads.size(); }
};

/// -iH - 1/2 sum_k L_k^* L_k
Matrix gksl_drift(const Matrix& hamiltonian, const std::vector<Op>& lindblads);

/// Assembles a model, validating shapes and the Hermiticity of H and C. The drift is derived.
ModelSpec make_model(const FockSpace& space, Op hamiltonian, std::vector<Op> lindblads, Op reference,
                     int interior_cutoff, std::string name);

ModelSpec build_kerr_oscillator(const FockSpace& space, const KerrParams& params);

/// Cavity mode damped by a thermal bath: alpha1 = sqrt(A(nu+1)), alpha2 = sqrt(A nu), beta2 = omega.
ModelSpec build_thermal_oscillator(const FockSpace& space, double rate, double nu, double omega = 0.0,
                                   int p = 4);

ModelSpec build_monitored_oscillator(const FockSpace& space, const MonitoredParams& params);

/// Hermitian, PSD, trace-normalized matrix.
class DensityMatrix {
 public:
  explicit DensityMatrix(Matrix m, double declared_trace = 1.0);
  static DensityMatrix pure(const Vector& psi);
  static DensityMatrix basis(const FockSpace& space, int n);

  const Matrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }
  double trace() const { return m_.trace().real(); }

 private:
  Matrix m_;
};

/// G rho + rho G^* + sum_k L_k rho L_k^*
template <typename Derived>
Matrix lindbladian_apply(const ModelSpec& model, const Eigen::MatrixBase<Derived>& rho) {
  if (rho.rows() != model.dim() || rho.cols() != model.dim())
    throw DimensionError("lindbladian_apply: shape mismatch");
  const Matrix& g = model.drift.matrix;
  Matrix out = g * rho;
  out += rho * g.adjoint();
  for (const auto& l : model.lindblads) out += l.matrix * rho * l.matrix.adjoint();
  return out;
}

/// A G + G^* A + sum_k L_k^* A L_k
template <typename Derived>
Matrix heisenberg_apply(const ModelSpec& model, const Eigen::MatrixBase<Derived>& obs) {
  if (obs.rows() != model.dim() || obs.cols() != model.dim())
    throw DimensionError("heisenberg_apply: shape mismatch");
  const Matrix& g = model.drift.matrix;
  Matrix out = obs * g;
  out += g.adjoint() * obs;
  for (const auto& l : model.lindblads) out += l.matrix.adjoint() * obs * l.matrix;
  return out;
}

inline Op heisenberg_apply(const ModelSpec& model, const Op& obs) {
  return {heisenberg_apply(model, obs.matrix), "L(" + obs.label + ")"};
}

struct GkslReport {
  double drift_residual = 0;
  /// max over n <= interior_cutoff of |2 Re<e_n, G e_n> + sum_k ||L_k e_n||^2|
  double trace_residual = 0;
  /// Same quantity over every basis index, truncation edge included.
  double trace_residual_all = 0;
  double hermiticity_residual = 0;
  double reference_min_eigenvalue = 0;

  bool ok() const {
    return drift_residual <= 1e-12 && trace_residual <= 1e-10 && hermiticity_residual <= 1e-12 &&
           reference_min_eigenvalue >= -1e-10;
  }
};

GkslReport gksl_consistency_check(const ModelSpec& model);

/// Projector onto span{e_0, ..., e_cutoff}.
Matrix interior_projector(const ModelSpec& model);

}  // namespace qtraj

#endif  // QTRAJ_HILBERT_HPP
