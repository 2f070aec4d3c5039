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

#include "qtraj/hilbert.hpp"

#include <cmath>
#include <sstream>

namespace qtraj {
namespace {

bool is_zero(Complex z) { return z == Complex(0.0, 0.0); }

Matrix matrix_power(const Matrix& m, int k) {
  Matrix out = identity(m.rows());
  for (int i = 0; i < k; ++i) out = out * m;
  return out;
}

}  // namespace

FockSpace::FockSpace(int dim) : dim_(dim) {
  if (dim < 2) throw DimensionError("FockSpace: dim must be >= 2, got " + std::to_string(dim));
}

Vector FockSpace::basis(int n) const {
  if (n < 0 || n >= dim_) throw DimensionError("FockSpace::basis: index out of range");
  Vector e = Vector::Zero(dim_);
  e(n) = 1.0;
  return e;
}

FockOperators build_fock_ops(const FockSpace& space) {
  const int d = space.dim();
  Matrix a = Matrix::Zero(d, d);
  for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  Matrix adag = a.adjoint();
  Matrix n = Matrix::Zero(d, d);
  for (int k = 0; k < d; ++k) n(k, k) = static_cast<double>(k);
  const double s = 1.0 / std::sqrt(2.0);
  Matrix q = (adag + a) * s;
  Matrix p = (adag - a) * Complex(0.0, s);
  return {{a, "a"}, {adag, "a^*"}, {n, "N"}, {q, "Q"}, {p, "P"}};
}

Matrix gksl_drift(const Matrix& hamiltonian, const std::vector<Op>& lindblads) {
  Matrix g = Complex(0.0, -1.0) * hamiltonian;
  for (const auto& l : lindblads) g -= 0.5 * (l.matrix.adjoint() * l.matrix);
  return g;
}

ModelSpec make_model(const FockSpace& space, Op hamiltonian, std::vector<Op> lindblads, Op reference,
                     int interior_cutoff, std::string name) {
  const int d = space.dim();
  auto check_shape = [d](const Op& op) {
    if (op.matrix.rows() != d || op.matrix.cols() != d)
      throw DimensionError("make_model: operator '" + op.label + "' has wrong shape");
    if (!op.matrix.allFinite())
      throw std::invalid_argument("make_model: operator '" + op.label + "' has non-finite entries");
  };
  check_shape(hamiltonian);
  check_shape(reference);
  for (const auto& l : lindblads) check_shape(l);
  if (hermiticity_residual(hamiltonian.matrix) > 1e-12)
    throw std::invalid_argument("make_model: Hamiltonian is not Hermitian");
  if (hermiticity_residual(reference.matrix) > 1e-12)
    throw std::invalid_argument("make_model: reference operator is not Hermitian");
  if (min_eigenvalue(reference.matrix) < -1e-10)
    throw std::invalid_argument("make_model: reference operator is not nonnegative");
  if (interior_cutoff < 0 || interior_cutoff >= d)
    throw std::invalid_argument("make_model: interior_cutoff out of range");

  // Exact Hermitian symmetry keeps Re<x, -iHx> identically zero.
  hamiltonian.matrix = hermitian_part(hamiltonian.matrix);
  reference.matrix = hermitian_part(reference.matrix);

  ModelSpec model;
  model.space = space;
  model.drift = {gksl_drift(hamiltonian.matrix, lindblads), "G"};
  model.hamiltonian = std::move(hamiltonian);
  model.lindblads = std::move(lindblads);
  model.reference = std::move(reference);
  model.interior_cutoff = interior_cutoff;
  model.name = std::move(name);
  return model;
}

ModelSpec build_kerr_oscillator(const FockSpace& space, const KerrParams& kp) {
  if (space.dim() < 8) throw DimensionError("build_kerr_oscillator: dim must be >= 8");
  if (kp.p < 1) throw std::invalid_argument("build_kerr_oscillator: p must be positive");
  const auto f = build_fock_ops(space);
  const Matrix a2 = f.a.matrix * f.a.matrix;
  const Matrix adag2 = f.adag.matrix * f.adag.matrix;
  const Matrix n2 = f.n.matrix * f.n.matrix;

  Matrix h = Complex(0.0, kp.beta1) * (f.adag.matrix - f.a.matrix) + kp.beta2 * f.n.matrix +
             kp.beta3 * (adag2 * a2);

  const std::array<Matrix, 6> channel{f.a.matrix, f.adag.matrix, f.n.matrix, a2, adag2, n2};
  const std::array<const char*, 6> channel_label{"a", "a^*", "N", "a^2", "(a^*)^2", "N^2"};
  std::vector<Op> lindblads;
  for (std::size_t k = 0; k < 6; ++k) {
    if (is_zero(kp.alpha[k])) continue;
    lindblads.push_back({kp.alpha[k] * channel[k], std::string("L") + std::to_string(k + 1) + "=" +
                                                       channel_label[k]});
  }

  Op c{matrix_power(f.n.matrix, kp.p), "N^" + std::to_string(kp.p)};
  ModelSpec model = make_model(space, {h, "H"}, std::move(lindblads), std::move(c), space.dim() - 5,
                               "kerr");
  model.kerr = kp;
  return model;
}

ModelSpec build_thermal_oscillator(const FockSpace& space, double rate, double nu, double omega, int p) {
  if (rate < 0 || nu < 0) throw std::invalid_argument("build_thermal_oscillator: rate and nu must be >= 0");
  KerrParams kp;
  kp.beta2 = omega;
  kp.alpha[0] = std::sqrt(rate * (nu + 1.0));
  kp.alpha[1] = std::sqrt(rate * nu);
  kp.p = p;
  ModelSpec model = build_kerr_oscillator(space, kp);
  model.name = "thermal";
  return model;
}

ModelSpec build_monitored_oscillator(const FockSpace& space, const MonitoredParams& mp) {
  if (space.dim() < 8) throw DimensionError("build_monitored_oscillator: dim must be >= 8");
  if (!(mp.m > 0)) throw std::invalid_argument("build_monitored_oscillator: mass must be positive");
  if (mp.alpha < 0 || mp.beta < 0)
    throw std::invalid_argument("build_monitored_oscillator: alpha and beta must be >= 0");
  const auto f = build_fock_ops(space);
  const Matrix q2 = f.q.matrix * f.q.matrix;
  const Matrix p2 = f.p.matrix * f.p.matrix;
  Matrix h = p2 / (2.0 * mp.m) + mp.c * q2;
  std::vector<Op> lindblads;
  if (mp.alpha != 0) lindblads.push_back({mp.alpha * f.q.matrix, "L1=Q"});
  if (mp.beta != 0) lindblads.push_back({mp.beta * f.p.matrix, "L2=P"});
  ModelSpec model =
      make_model(space, {h, "H"}, std::move(lindblads), {p2 + q2, "P^2+Q^2"}, space.dim() - 5, "monitored");
  model.monitored = mp;
  return model;
}

DensityMatrix::DensityMatrix(Matrix m, double declared_trace) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) throw DimensionError("DensityMatrix: matrix must be square");
  if (!m_.allFinite()) throw std::invalid_argument("DensityMatrix: non-finite entries");
  const double herm = hermiticity_residual(m_);
  if (herm > 1e-10) {
    std::ostringstream os;
    os << "DensityMatrix: not Hermitian (residual " << herm << ")";
    throw std::invalid_argument(os.str());
  }
  m_ = hermitian_part(m_);
  const double lmin = min_eigenvalue(m_);
  if (lmin < -1e-8) {
    std::ostringstream os;
    os << "DensityMatrix: negative eigenvalue " << lmin;
    throw std::invalid_argument(os.str());
  }
  if (std::abs(trace() - declared_trace) > 1e-8) {
    std::ostringstream os;
    os << "DensityMatrix: trace " << trace() << " differs from declared " << declared_trace;
    throw std::invalid_argument(os.str());
  }
}

DensityMatrix DensityMatrix::pure(const Vector& psi) {
  return DensityMatrix(psi * psi.adjoint(), psi.squaredNorm());
}

DensityMatrix DensityMatrix::basis(const FockSpace& space, int n) { return pure(space.basis(n)); }

GkslReport gksl_consistency_check(const ModelSpec& model) {
  GkslReport r;
  const Matrix expected = gksl_drift(model.hamiltonian.matrix, model.lindblads);
  r.drift_residual = max_abs(model.drift.matrix - expected);
  r.hermiticity_residual = std::max(hermiticity_residual(model.hamiltonian.matrix),
                                    hermiticity_residual(model.reference.matrix));
  r.reference_min_eigenvalue = min_eigenvalue(model.reference.matrix);
  for (int n = 0; n < model.dim(); ++n) {
    double value = 2.0 * model.drift.matrix(n, n).real();
    for (const auto& l : model.lindblads) value += l.matrix.col(n).squaredNorm();
    const double res = std::abs(value);
    r.trace_residual_all = std::max(r.trace_residual_all, res);
    if (n <= model.interior_cutoff) r.trace_residual = std::max(r.trace_residual, res);
  }
  return r;
}

Matrix interior_projector(const ModelSpec& model) {
  Matrix pr = Matrix::Zero(model.dim(), model.dim());
  for (int n = 0; n <= model.interior_cutoff; ++n) pr(n, n) = 1.0;
  return pr;
}

}  // namespace qtraj
