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

#include "qtraj/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <limits>

namespace qtraj {
namespace {

using Sparse = Eigen::SparseMatrix<Complex>;

// Direct matrix-ODE right-hand side with sparse copies of the model operators.
class MatrixGenerator {
 public:
  MatrixGenerator(const ModelSpec& model, bool heisenberg) : heisenberg_(heisenberg) {
    g_ = model.drift.matrix.sparseView();
    gadj_ = Matrix(model.drift.matrix.adjoint()).sparseView();
    for (const auto& l : model.lindblads) {
      l_.push_back(l.matrix.sparseView());
      ladj_.push_back(Matrix(l.matrix.adjoint()).sparseView());
    }
    const double g_norm = operator_norm(model.drift.matrix);
    double jump = 0;
    for (const auto& l : model.lindblads) jump += std::pow(operator_norm(l.matrix), 2);
    spectral_bound_ = 2.0 * g_norm + jump;
  }

  Matrix operator()(const Matrix& x) const {
    Matrix out;
    if (!heisenberg_) {
      out = g_ * x;
      out += x * gadj_;
      for (std::size_t k = 0; k < l_.size(); ++k) out += l_[k] * (x * ladj_[k]);
    } else {
      out = x * g_;
      out += gadj_ * x;
      for (std::size_t k = 0; k < l_.size(); ++k) out += ladj_[k] * (x * l_[k]);
    }
    return out;
  }

  double spectral_bound() const { return spectral_bound_; }

 private:
  bool heisenberg_;
  Sparse g_, gadj_;
  std::vector<Sparse> l_, ladj_;
  double spectral_bound_ = 0;
};

Matrix rk4_step(const MatrixGenerator& f, const Matrix& x, double h) {
  const Matrix k1 = f(x);
  const Matrix k2 = f(x + 0.5 * h * k1);
  const Matrix k3 = f(x + 0.5 * h * k2);
  const Matrix k4 = f(x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

constexpr double kLocalErrorTarget = 1e-10;

// Integrates over [0, span] with step-doubling control of the local error on each first substep.
Matrix rk4_interval(const MatrixGenerator& f, Matrix x, double span, double& h_hint) {
  const double h_stable = 2.5 / std::max(f.spectral_bound(), 1e-300);
  double done = 0.0;
  while (done < span) {
    const double remaining = span - done;
    double h = std::min({h_hint, h_stable, remaining});
    // Avoid a sliver at the end of the interval.
    if (remaining - h < 1e-3 * h) h = remaining;
    for (;;) {
      const Matrix coarse = rk4_step(f, x, h);
      const Matrix fine = rk4_step(f, rk4_step(f, x, 0.5 * h), 0.5 * h);
      const double err = (fine - coarse).norm() / 15.0;
      if (err <= kLocalErrorTarget || h < 1e-12) {
        x = fine;
        done += h;
        if (err < kLocalErrorTarget / 32.0) h_hint = std::min(2.0 * h, h_stable);
        else h_hint = h;
        break;
      }
      h *= 0.5;
      h_hint = h;
    }
  }
  return x;
}

void check_times(const std::vector<double>& times) {
  if (times.empty() || times.front() != 0.0) throw std::invalid_argument("propagation times must start at 0");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw std::invalid_argument("propagation times must be strictly increasing");
}

PropagatedFamily propagate(const ModelSpec& model, const Matrix& x0, const std::vector<double>& times,
                           bool heisenberg) {
  check_times(times);
  const Eigen::Index d = model.dim();
  if (x0.rows() != d || x0.cols() != d) throw DimensionError("propagate: shape mismatch");
  const bool check_herm = hermiticity_residual(x0) <= 1e-12 * std::max(1.0, max_abs(x0));

  PropagatedFamily fam;
  fam.times = times;
  fam.values.reserve(times.size());
  fam.values.push_back(x0);

  auto verify = [&](const Matrix& m, double t) {
    if (!m.allFinite()) throw OracleFault("non-finite propagated matrix", t);
    if (check_herm && hermiticity_residual(m) > 1e-7 * std::max(1.0, max_abs(m)))
      throw OracleFault("propagated matrix lost Hermiticity", t);
  };

  if (d <= kExpmDimLimit) {
    const Superoperator s = heisenberg ? vectorize_heisenberg(model) : vectorize_lindbladian(model);
    Vector v = vec(x0);
    double last_delta = -1.0;
    Matrix step;
    for (std::size_t i = 1; i < times.size(); ++i) {
      const double delta = times[i] - times[i - 1];
      if (std::abs(delta - last_delta) > 1e-15 * std::max(1.0, delta)) {
        step = expm(s.matrix * delta);
        last_delta = delta;
      }
      v = step * v;
      Matrix m = unvec(v, d);
      verify(m, times[i]);
      fam.values.push_back(std::move(m));
    }
  } else {
    const MatrixGenerator f(model, heisenberg);
    Matrix x = x0;
    double h_hint = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < times.size(); ++i) {
      x = rk4_interval(f, x, times[i] - times[i - 1], h_hint);
      verify(x, times[i]);
      fam.values.push_back(x);
    }
  }
  return fam;
}

// Composite Simpson weights on nodes 0..j of spacing h; a 3/8 panel closes odd interval counts.
std::vector<double> quadrature_weights(std::size_t j, double h) {
  std::vector<double> w(j + 1, 0.0);
  if (j == 0) return w;
  if (j == 1) {
    w[0] = w[1] = 0.5 * h;
    return w;
  }
  const std::size_t simpson_end = (j % 2 == 0) ? j : j - 3;
  for (std::size_t i = 0; i + 2 <= simpson_end; i += 2) {
    w[i] += h / 3.0;
    w[i + 1] += 4.0 * h / 3.0;
    w[i + 2] += h / 3.0;
  }
  if (j % 2 == 1) {
    const std::size_t b = j - 3;
    w[b] += 3.0 * h / 8.0;
    w[b + 1] += 9.0 * h / 8.0;
    w[b + 2] += 9.0 * h / 8.0;
    w[b + 3] += 3.0 * h / 8.0;
  }
  return w;
}

}  // namespace

Matrix Superoperator::apply(const Matrix& m) const { return unvec(matrix * vec(m), m.rows()); }

Superoperator vectorize_lindbladian(const ModelSpec& model) {
  const Matrix& g = model.drift.matrix;
  const Matrix id = identity(model.dim());
  // vec(A X B) = (B^T kron A) vec(X)
  Matrix s = Eigen::kroneckerProduct(id, g).eval();
  s += Eigen::kroneckerProduct(Matrix(g.conjugate()), id).eval();
  for (const auto& l : model.lindblads) s += Eigen::kroneckerProduct(Matrix(l.matrix.conjugate()), l.matrix).eval();
  return {std::move(s)};
}

Superoperator vectorize_heisenberg(const ModelSpec& model) {
  const Matrix& g = model.drift.matrix;
  const Matrix id = identity(model.dim());
  Matrix s = Eigen::kroneckerProduct(Matrix(g.transpose()), id).eval();
  s += Eigen::kroneckerProduct(id, Matrix(g.adjoint())).eval();
  for (const auto& l : model.lindblads)
    s += Eigen::kroneckerProduct(Matrix(l.matrix.transpose()), Matrix(l.matrix.adjoint())).eval();
  return {std::move(s)};
}

std::vector<double> uniform_times(double t_end, double dt) {
  if (!(dt > 0) || !(t_end >= 0)) throw std::invalid_argument("uniform_times: need dt > 0 and t_end >= 0");
  const auto n = static_cast<std::size_t>(std::llround(t_end / dt));
  std::vector<double> t(n + 1);
  for (std::size_t i = 0; i <= n; ++i) t[i] = static_cast<double>(i) * dt;
  return t;
}

PropagatedFamily solve_master(const ModelSpec& model, const DensityMatrix& rho0, const std::vector<double>& times) {
  return propagate(model, rho0.matrix(), times, false);
}

PropagatedFamily solve_heisenberg(const ModelSpec& model, const Op& obs, const std::vector<double>& times) {
  return propagate(model, obs.matrix, times, true);
}

Matrix propagate_master(const ModelSpec& model, const Matrix& rho, double t) {
  if (t == 0.0) return rho;
  if (model.dim() <= kExpmDimLimit)
    return unvec(expm(vectorize_lindbladian(model).matrix * t) * vec(rho), model.dim());
  return propagate(model, rho, {0.0, t}, false).values.back();
}

double spectral_gap(const ModelSpec& model) {
  if (model.dim() > kExpmDimLimit) throw DimensionError("spectral_gap: dim exceeds the dense superoperator limit");
  Eigen::ComplexEigenSolver<Matrix> es(vectorize_lindbladian(model).matrix, false);
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const Complex lam = es.eigenvalues()(i);
    if (std::abs(lam) <= 1e-8) continue;
    gap = std::min(gap, std::abs(lam.real()));
  }
  return std::isfinite(gap) ? gap : 0.0;
}

PicardResult minimal_semigroup_picard(const ModelSpec& model, const Op& obs, double t, int n_iters,
                                      int quad_points) {
  if (!(t >= 0)) throw std::invalid_argument("minimal_semigroup_picard: t must be >= 0");
  if (n_iters < 0) throw std::invalid_argument("minimal_semigroup_picard: n_iters must be >= 0");
  if (quad_points < 3) throw std::invalid_argument("minimal_semigroup_picard: quad_points must be >= 3");
  if (obs.matrix.rows() != model.dim()) throw DimensionError("minimal_semigroup_picard: shape mismatch");

  const auto q = static_cast<std::size_t>(quad_points);
  const double h = t / static_cast<double>(q - 1);
  std::vector<Matrix> e(q), eadj(q), base(q);
  for (std::size_t j = 0; j < q; ++j) {
    e[j] = expm(model.drift.matrix * (h * static_cast<double>(j)));
    eadj[j] = e[j].adjoint();
    base[j] = eadj[j] * obs.matrix * e[j];
  }
  std::vector<std::vector<double>> weights(q);
  for (std::size_t j = 0; j < q; ++j) weights[j] = quadrature_weights(j, h);

  PicardResult res;
  std::vector<Matrix> current = base;
  res.iterates.push_back(current.back());
  for (int n = 1; n <= n_iters; ++n) {
    std::vector<Matrix> jumped(q);
    for (std::size_t i = 0; i < q; ++i) {
      jumped[i] = Matrix::Zero(model.dim(), model.dim());
      for (const auto& l : model.lindblads) jumped[i] += l.matrix.adjoint() * current[i] * l.matrix;
    }
    std::vector<Matrix> next(q);
    for (std::size_t j = 0; j < q; ++j) {
      next[j] = base[j];
      for (std::size_t i = 0; i <= j; ++i) {
        const double w = weights[j][i];
        if (w == 0.0) continue;
        next[j] += w * (eadj[j - i] * jumped[i] * e[j - i]);
      }
    }
    current = std::move(next);
    res.iterates.push_back(current.back());
    if (!res.iterates.back().allFinite()) {
      res.diverging = true;
      break;
    }
    res.successive_differences.push_back(operator_norm(res.iterates[n] - res.iterates[n - 1]));
  }
  return res;
}

double duality_check(const ModelSpec& model, const Op& obs, const DensityMatrix& rho0,
                     const std::vector<double>& times) {
  const auto master = solve_master(model, rho0, times);
  const auto heis = solve_heisenberg(model, obs, times);
  double worst = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const Complex lhs = (obs.matrix * master.values[i]).trace();
    const Complex rhs = (heis.values[i] * rho0.matrix()).trace();
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

SemigroupReport semigroup_check(const Propagator& propagate_fn, const Matrix& rho0, double t, double s) {
  if (!(t >= 0) || !(s >= 0)) throw std::invalid_argument("semigroup_check: t and s must be >= 0");
  SemigroupReport r;
  const Matrix direct = propagate_fn(rho0, t + s);
  const Matrix composed = propagate_fn(propagate_fn(rho0, s), t);
  r.residual = trace_norm(hermitian_part(direct - composed));
  r.contraction = trace_norm(propagate_fn(rho0, t));
  r.initial_norm = trace_norm(rho0);
  return r;
}

SemigroupReport semigroup_check(const ModelSpec& model, const DensityMatrix& rho0, double t, double s) {
  if (model.dim() <= kExpmDimLimit) {
    const Superoperator sup = vectorize_lindbladian(model);
    return semigroup_check(
        [&](const Matrix& rho, double tau) -> Matrix {
          if (tau == 0.0) return rho;
          return unvec(expm(sup.matrix * tau) * vec(rho), model.dim());
        },
        rho0.matrix(), t, s);
  }
  return semigroup_check([&](const Matrix& rho, double tau) { return propagate_master(model, rho, tau); },
                         rho0.matrix(), t, s);
}

}  // namespace qtraj
