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

#ifndef QTRAJ_LINALG_HPP
#define QTRAJ_LINALG_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>

namespace qtraj {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

template <typename Scalar>
using MatrixOf = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

/// Largest entrywise deviation of M from its adjoint.
template <typename Derived>
typename Derived::RealScalar hermiticity_residual(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return 0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

/// (M + M^*) / 2, evaluated.
template <typename Derived>
typename Derived::PlainObject hermitian_part(const Eigen::MatrixBase<Derived>& m) {
  return ((m + m.adjoint()) / typename Derived::RealScalar(2)).eval();
}

template <typename Derived>
typename Derived::RealScalar max_abs(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return 0;
  return m.cwiseAbs().maxCoeff();
}

/// Column-stacking vectorization.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> vec(const Eigen::MatrixBase<Derived>& m) {
  typename Derived::PlainObject plain = m;
  return Eigen::Map<const Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>>(plain.data(),
                                                                                     plain.size());
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> unvec(
    const Eigen::MatrixBase<Derived>& v, Eigen::Index dim) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> plain = v;
  return Eigen::Map<const Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>>(
      plain.data(), dim, dim);
}

/// Trace norm. Hermitian inputs use the eigenvalue sum; others fall back to singular values.
double trace_norm(const Matrix& m);

/// Largest singular value.
double operator_norm(const Matrix& m);

/// Smallest eigenvalue of the Hermitian part of m.
double min_eigenvalue(const Matrix& m);

/// Scaling-and-squaring Pade exponential.
Matrix expm(const Matrix& m);

Matrix identity(Eigen::Index dim);

/// <x, A x> with the inner product antilinear in its first slot.
inline Complex expectation(const Vector& x, const Matrix& a) { return x.dot(a * x); }

}  // namespace qtraj

#endif  // QTRAJ_LINALG_HPP
