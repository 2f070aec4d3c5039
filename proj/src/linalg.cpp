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

#include "qtraj/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace qtraj {

double trace_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const double scale = std::max(1.0, max_abs(m));
  if (hermiticity_residual(m) <= 1e-13 * scale) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().sum();
  }
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double min_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Matrix expm(const Matrix& m) { return m.exp(); }

Matrix identity(Eigen::Index dim) { return Matrix::Identity(dim, dim); }

}  // namespace qtraj
