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

#ifndef QTRAJ_ORACLE_HPP
#define QTRAJ_ORACLE_HPP

#include "qtraj/hilbert.hpp"

#include <functional>
#include <stdexcept>
#include <vector>

namespace qtraj {

/// Matrix acting on column-stacked dim x dim matrices.
struct Superoperator {
  Matrix matrix;
  Eigen::Index dim() const { return static_cast<Eigen::Index>(std::llround(std::sqrt(double(matrix.rows())))); }
  Matrix apply(const Matrix& m) const;
};

/// Matrices (density operators or evolved observables) sampled at strictly increasing times from 0.
struct PropagatedFamily {
  std::vector<double> times;
  std::vector<Matrix> values;
};

class OracleFault : public std::runtime_error {
 public:
  OracleFault(const std::string& what, double time)
      : std::runtime_error(what + " at t=" + std::to_string(time)), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// Superoperator of rho -> G rho + rho G^* + sum_k L_k rho L_k^*.
Superoperator vectorize_lindbladian(const ModelSpec& model);
/// Superoperator of A -> A G + G^* A + sum_k L_k^* A L_k.
Superoperator vectorize_heisenberg(const ModelSpec& model);

/// Largest dimension propagated through the dense superoperator exponential; larger models use RK4.
inline constexpr int kExpmDimLimit = 32;

/// Uniform save times 0, dt, 2 dt, ..., t_end.
std::vector<double> uniform_times(double t_end, double dt);

PropagatedFamily solve_master(const ModelSpec& model, const DensityMatrix& rho0, const std::vector<double>& times);
PropagatedFamily solve_heisenberg(const ModelSpec& model, const Op& obs, const std::vector<double>& times);

/// rho_t = e^{t L_*}(rho) at a single time.
Matrix propagate_master(const ModelSpec& model, const Matrix& rho, double t);

/// Smallest nonzero decay rate of the vectorized Lindbladian (dim <= kExpmDimLimit).
double spectral_gap(const ModelSpec& model);

/// T^(0)_t, ..., T^(n)_t of the successive approximations
///   <u, T^(n+1)_t(A) v> = <e^{Gt}u, A e^{Gt}v> + sum_k int_0^t <L_k e^{G(t-s)}u, T^(n)_s(A) L_k e^{G(t-s)}v> ds
/// with T^(-1) = 0, on quad_points uniformly spaced nodes (composite Simpson).
struct PicardResult {
  std::vector<Matrix> iterates;
  /// ||T^(n) - T^(n-1)|| in operator norm, n >= 1.
  std::vector<double> successive_differences;
  /// Set when an iterate overflows; the remaining iterates are not computed.
  bool diverging = false;
};

PicardResult minimal_semigroup_picard(const ModelSpec& model, const Op& obs, double t, int n_iters,
                                      int quad_points = 33);

/// max over times of |tr(A rho_t) - tr(T_t(A) rho_0)|.
double duality_check(const ModelSpec& model, const Op& obs, const DensityMatrix& rho0,
                     const std::vector<double>& times);

struct SemigroupReport {
  double residual = 0;     // ||rho_{t+s} - rho_t(rho_s)||_1
  double contraction = 0;  // ||rho_t(rho0)||_1
  double initial_norm = 0; // ||rho0||_1
  bool contractive() const { return contraction <= initial_norm + 1e-9; }
};

using Propagator = std::function<Matrix(const Matrix& rho, double t)>;

SemigroupReport semigroup_check(const Propagator& propagate, const Matrix& rho0, double t, double s);
SemigroupReport semigroup_check(const ModelSpec& model, const DensityMatrix& rho0, double t, double s);

}  // namespace qtraj

#endif  // QTRAJ_ORACLE_HPP
