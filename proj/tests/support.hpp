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

#ifndef QTRAJ_TESTS_SUPPORT_HPP
#define QTRAJ_TESTS_SUPPORT_HPP

#include "qtraj/hilbert.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace qtraj::test {

// Independent reference constructions; none of these call into the library's operator code.

inline Matrix ladder(int d) {
  Matrix a = Matrix::Zero(d, d);
  for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

inline Matrix number(int d) {
  Matrix n = Matrix::Zero(d, d);
  for (int k = 0; k < d; ++k) n(k, k) = k;
  return n;
}

inline Matrix random_matrix(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = Complex(g(rng), g(rng));
  return m;
}

inline Matrix random_hermitian(int d, std::mt19937_64& rng) {
  const Matrix m = random_matrix(d, rng);
  return (m + m.adjoint()) / 2.0;
}

inline Vector random_unit(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = Complex(g(rng), g(rng));
  return v.normalized();
}

inline Matrix random_density(int d, std::mt19937_64& rng) {
  const Matrix m = random_matrix(d, rng);
  Matrix rho = m * m.adjoint();
  return rho / rho.trace().real();
}

/// Random finite model: Hermitian H, one to three general L_k, C = N.
inline ModelSpec random_model(int d, std::mt19937_64& rng) {
  const FockSpace space(d);
  std::vector<Op> ls;
  const int k = 1 + static_cast<int>(rng() % 3);
  for (int j = 0; j < k; ++j) ls.push_back({random_matrix(d, rng) * (0.5 / std::sqrt(double(d))), "L" + std::to_string(j + 1)});
  return make_model(space, {random_hermitian(d, rng) * 0.5, "H"}, ls, {number(d), "N"}, d - 1, "random");
}

/// -i[H, rho] + sum_k (L rho L^* - {L^*L, rho}/2), written out term by term.
inline Matrix lindblad_reference(const Matrix& h, const std::vector<Op>& ls, const Matrix& rho) {
  const Complex i(0, 1);
  Matrix out = -i * (h * rho - rho * h);
  for (const auto& l : ls) {
    const Matrix& L = l.matrix;
    const Matrix ldl = L.adjoint() * L;
    out += L * rho * L.adjoint() - 0.5 * (ldl * rho + rho * ldl);
  }
  return out;
}

inline Matrix closed_hamiltonian(int d, double beta) { return beta * number(d); }

/// Unitary e^{-iHt} for diagonal H.
inline Matrix diagonal_unitary(const Matrix& h, double t) {
  Matrix u = Matrix::Zero(h.rows(), h.cols());
  for (Eigen::Index k = 0; k < h.rows(); ++k) u(k, k) = std::exp(Complex(0, -t * h(k, k).real()));
  return u;
}

}  // namespace qtraj::test

#endif  // QTRAJ_TESTS_SUPPORT_HPP
