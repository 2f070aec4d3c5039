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

#include "qtraj/regularity.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qtraj {

CRegularDecomposition::CRegularDecomposition(std::vector<double> weights, std::vector<Vector> vectors, Op reference,
                                             double discarded_mass)
    : weights_(std::move(weights)),
      vectors_(std::move(vectors)),
      reference_(std::move(reference)),
      discarded_mass_(discarded_mass),
      trace_(0.0) {
  if (weights_.size() != vectors_.size())
    throw std::invalid_argument("CRegularDecomposition: weights and vectors differ in length");
  for (std::size_t n = 0; n < weights_.size(); ++n) {
    if (!(weights_[n] >= 0) || !std::isfinite(weights_[n]))
      throw std::invalid_argument("CRegularDecomposition: weights must be finite and >= 0");
    if (vectors_[n].size() != reference_.matrix.rows())
      throw DimensionError("CRegularDecomposition: vector dimension does not match the reference operator");
    if (std::abs(vectors_[n].norm() - 1.0) > 1e-10)
      throw std::invalid_argument("CRegularDecomposition: vectors must have unit norm");
    trace_ += weights_[n];
  }
  if (!(trace_ > 0)) throw std::invalid_argument("CRegularDecomposition: at least one weight must be positive");
}

CRegularDecomposition CRegularDecomposition::from_density(const DensityMatrix& rho, Op reference, double cutoff) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho.matrix());
  std::vector<double> w;
  std::vector<Vector> u;
  double discarded = 0;
  for (Eigen::Index i = es.eigenvalues().size(); i-- > 0;) {
    const double lam = es.eigenvalues()(i);
    if (lam <= cutoff) {
      discarded += std::max(lam, 0.0);
      continue;
    }
    w.push_back(lam);
    u.push_back(es.eigenvectors().col(i).normalized());
  }
  return CRegularDecomposition(std::move(w), std::move(u), std::move(reference), discarded);
}

double CRegularDecomposition::c_moment() const {
  double s = 0;
  for (std::size_t n = 0; n < weights_.size(); ++n) s += weights_[n] * (reference_.matrix * vectors_[n]).squaredNorm();
  return s;
}

Matrix CRegularDecomposition::density() const {
  const auto d = reference_.matrix.rows();
  Matrix rho = Matrix::Zero(d, d);
  for (std::size_t n = 0; n < weights_.size(); ++n) rho += weights_[n] * (vectors_[n] * vectors_[n].adjoint());
  return rho;
}

PureState sample_c_regular(const CRegularDecomposition& decomp, std::uint64_t seed) {
  const double u = NoiseStream(seed, 0).uniform(0) * decomp.trace();
  double cum = 0;
  std::size_t chosen = 0;
  // If rounding leaves u above the final cumulative sum, the last positive weight is kept.
  for (std::size_t n = 0; n < decomp.weights().size(); ++n) {
    if (decomp.weights()[n] <= 0) continue;
    chosen = n;
    cum += decomp.weights()[n];
    if (u <= cum) break;
  }
  return PureState(decomp.sample_value(chosen));
}

Matrix exact_mixture(const CRegularDecomposition& decomp) {
  const auto d = decomp.reference().matrix.rows();
  Matrix rho = Matrix::Zero(d, d);
  for (std::size_t n = 0; n < decomp.weights().size(); ++n) {
    const Vector xi = decomp.sample_value(n);
    rho += decomp.outcome_probability(n) * (xi * xi.adjoint());
  }
  return rho;
}

double verify_trace_identity(const CRegularDecomposition& decomp, const Op& a_obs, const Op& b_obs) {
  const Matrix rho = decomp.density();
  if (a_obs.matrix.rows() != rho.rows() || b_obs.matrix.rows() != rho.rows())
    throw DimensionError("verify_trace_identity: shape mismatch");
  const Complex lhs = (a_obs.matrix * rho * b_obs.matrix).trace();
  Complex rhs = 0;
  const Matrix b_adj = b_obs.matrix.adjoint();
  for (std::size_t n = 0; n < decomp.weights().size(); ++n) {
    const Vector xi = decomp.sample_value(n);
    rhs += decomp.outcome_probability(n) * (b_adj * xi).dot(a_obs.matrix * xi);
  }
  return std::abs(lhs - rhs);
}

InitialSampler c_regular_sampler(CRegularDecomposition decomp) {
  return [d = std::move(decomp)](std::uint64_t seed) { return sample_c_regular(d, seed); };
}

std::vector<Op> regularity_tracked_ops(const Op& c_op) {
  const Eigen::Index d = c_op.matrix.rows();
  Matrix tail = Matrix::Zero(d, d);
  for (Eigen::Index n = std::max<Eigen::Index>(0, d - 3); n < d; ++n) tail(n, n) = 1.0;
  return {{c_op.matrix.adjoint() * c_op.matrix, c_op.label + "^2"}, {tail, "tail3"}};
}

RegularityTrace regularity_trace(const TrajectoryBatch& batch, const Op& c_op) {
  const int d = batch.model->dim();
  if (c_op.matrix.rows() != d) throw DimensionError("regularity_trace: shape mismatch");
  const auto wanted = regularity_tracked_ops(c_op);
  std::size_t slot[2] = {batch.tracked.size(), batch.tracked.size()};
  if (!batch.has_states()) {
    for (int k = 0; k < 2; ++k)
      for (std::size_t o = 0; o < batch.tracked.size(); ++o)
        if (batch.tracked[o].label == wanted[k].label && batch.tracked[o].matrix == wanted[k].matrix) slot[k] = o;
    if (slot[0] == batch.tracked.size() || slot[1] == batch.tracked.size())
      throw std::invalid_argument("regularity_trace: batch kept neither its states nor the regularity observables");
  }
  RegularityTrace out;
  out.times = batch.times;
  for (std::size_t s = 0; s < batch.times.size(); ++s) {
    std::vector<double> cvals;
    double tail = 0, mass = 0;
    for (std::size_t i = 0; i < batch.M; ++i) {
      if (batch.faulted[i]) continue;
      if (batch.has_states()) {
        const Vector& psi = batch.states[s][i];
        cvals.push_back((c_op.matrix * psi).squaredNorm());
        tail += psi.tail(std::min(3, d)).squaredNorm();
      } else {
        cvals.push_back(batch.tracked_values[slot[0]][s][i].real());
        tail += batch.tracked_values[slot[1]][s][i].real();
      }
      mass += batch.norms_sq[s][i];
    }
    const auto est = sample_mean(cvals);
    out.values.push_back(est.value.real());
    out.stderrs.push_back(est.stderr);
    const double tm = mass > 0 ? std::clamp(tail / mass, 0.0, 1.0) : 0.0;
    out.tail_mass.push_back(tm);
    if (tm > kTailMassThreshold && !out.truncation_unreliable) {
      out.truncation_unreliable = true;
      out.first_flag_time = batch.times[s];
    }
  }
  return out;
}

const char* to_string(InequalityKind kind) {
  switch (kind) {
    case InequalityKind::nonexplosion_i2: return "nonexplosion_i2";
    case InequalityKind::hyp61: return "hyp61";
    case InequalityKind::hypL: return "hypL";
  }
  return "?";
}

InequalityKind parse_inequality_kind(const std::string& text) {
  if (text == "nonexplosion_i2") return InequalityKind::nonexplosion_i2;
  if (text == "hyp61") return InequalityKind::hyp61;
  if (text == "hypL") return InequalityKind::hypL;
  throw std::invalid_argument("unknown inequality kind '" + text + "'");
}

double dissipativity_lhs(const ModelSpec& model, const Op& c_op, const Vector& x) {
  const Matrix& c = c_op.matrix;
  const Vector cx = c * x;
  const Vector c2x = c * cx;
  double lhs = 2.0 * c2x.dot(model.drift.matrix * x).real();
  for (const auto& l : model.lindblads) lhs += (c * (l.matrix * x)).squaredNorm();
  return lhs;
}

LyapunovReport check_dissipativity(const ModelSpec& model, const Op& c_op, InequalityKind kind, int probes,
                                   std::uint64_t seed, const DissipativityOptions& options) {
  if (probes < 1) throw std::invalid_argument("check_dissipativity: probes must be >= 1");
  if (c_op.matrix.rows() != model.dim()) throw DimensionError("check_dissipativity: shape mismatch");
  if (options.D && options.D->matrix.rows() != model.dim()) throw DimensionError("check_dissipativity: D has wrong shape");
  if (kind == InequalityKind::hypL && !options.D)
    throw std::invalid_argument("check_dissipativity: hypL requires an operator D");

  const int support = model.interior_cutoff + 1;
  auto evaluate = [&](const Vector& x) -> std::pair<double, double> {
    double lhs = dissipativity_lhs(model, c_op, x);
    const double x2 = x.squaredNorm();
    const double cx2 = (c_op.matrix * x).squaredNorm();
    switch (kind) {
      case InequalityKind::nonexplosion_i2: return {lhs, cx2 + x2};
      case InequalityKind::hyp61: return {lhs, x2 + cx2 + 1.0};
      case InequalityKind::hypL:
        lhs += (options.D->matrix * x).squaredNorm();
        return {lhs, 1.0 + x2};
    }
    return {lhs, 1.0};
  };

  std::vector<std::pair<double, double>> samples;
  LyapunovReport rep;
  rep.inequality_kind = kind;
  rep.D = options.D;
  rep.estimated_K = -std::numeric_limits<double>::infinity();
  for (int n = 0; n < support; ++n) {
    const auto s = evaluate(model.space.basis(n));
    samples.push_back(s);
    const double k = s.first / s.second;
    if (k > rep.estimated_K) {
      rep.estimated_K = k;
      rep.argmax_basis_index = n;
    }
  }
  for (int j = 0; j < probes; ++j) {
    const NoiseStream stream(seed, static_cast<std::uint64_t>(j));
    Vector x = Vector::Zero(model.dim());
    for (int n = 0; n < support; ++n)
      x(n) = Complex(stream.normal(0, static_cast<std::uint32_t>(2 * n)), stream.normal(0, static_cast<std::uint32_t>(2 * n + 1)));
    x.normalize();
    const auto s = evaluate(x);
    samples.push_back(s);
    const double k = s.first / s.second;
    if (k > rep.estimated_K) {
      rep.estimated_K = k;
      rep.argmax_basis_index = -1;
    }
  }
  rep.basis_probes = static_cast<std::size_t>(support);
  rep.random_probes = static_cast<std::size_t>(probes);
  rep.reference_K = options.K.value_or(rep.estimated_K);
  rep.max_violation = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) rep.max_violation = std::max(rep.max_violation, s.first - rep.reference_K * s.second);
  std::ostringstream os;
  os << support << " interior basis vectors + " << probes << " random unit vectors on indices <= "
     << model.interior_cutoff << " (seed " << seed << ")";
  rep.sample_description = os.str();
  return rep;
}

bool kerr_regularity_predicate(Complex alpha4, Complex alpha5) { return std::abs(alpha4) >= std::abs(alpha5); }

bool kerr_stationary_predicate(Complex alpha1, Complex alpha2, Complex alpha4, Complex alpha5, int p) {
  if (p < 4) throw std::invalid_argument("kerr_stationary_predicate: p must be >= 4");
  const double a4 = std::abs(alpha4), a5 = std::abs(alpha5);
  if (a4 > a5) return true;
  if (a4 == a5) return std::norm(alpha2) - std::norm(alpha1) + 4.0 * (2.0 * p + 1.0) * a4 * a4 < 0.0;
  return false;
}

}  // namespace qtraj
