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

#ifndef QTRAJ_REGULARITY_HPP
#define QTRAJ_REGULARITY_HPP

#include "qtraj/ensemble.hpp"

#include <optional>
#include <vector>

namespace qtraj {

/// rho = sum_n lambda_n |u_n><u_n| with finitely many unit vectors u_n.
class CRegularDecomposition {
 public:
  CRegularDecomposition(std::vector<double> weights, std::vector<Vector> vectors, Op reference,
                        double discarded_mass = 0.0);
  /// Spectral decomposition of a density matrix; eigenvalues below `cutoff` are dropped into discarded_mass.
  static CRegularDecomposition from_density(const DensityMatrix& rho, Op reference, double cutoff = 0.0);

  const std::vector<double>& weights() const { return weights_; }
  const std::vector<Vector>& vectors() const { return vectors_; }
  const Op& reference() const { return reference_; }
  double discarded_mass() const { return discarded_mass_; }

  double trace() const { return trace_; }
  /// sum_n lambda_n ||C u_n||^2
  double c_moment() const;
  /// sum_n lambda_n |u_n><u_n|
  Matrix density() const;
  /// Outcome n of the sampling construction carries probability lambda_n / tr and value sqrt(tr) u_n.
  Vector sample_value(std::size_t n) const { return std::sqrt(trace_) * vectors_[n]; }
  double outcome_probability(std::size_t n) const { return weights_[n] / trace_; }

 private:
  std::vector<double> weights_;
  std::vector<Vector> vectors_;
  Op reference_;
  double discarded_mass_;
  double trace_;
};

PureState sample_c_regular(const CRegularDecomposition& decomp, std::uint64_t seed);

/// sum_n P(n) |xi(n)><xi(n)| evaluated exactly over the finite outcome set.
Matrix exact_mixture(const CRegularDecomposition& decomp);

/// | tr(A rho B) - E<B^* xi, A xi> |, both sides computed exactly.
double verify_trace_identity(const CRegularDecomposition& decomp, const Op& a_obs, const Op& b_obs);

InitialSampler c_regular_sampler(CRegularDecomposition decomp);

inline constexpr double kTailMassThreshold = 1e-6;

struct RegularityTrace {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> stderrs;
  /// Weight of the top three basis indices relative to the ensemble mean squared norm.
  std::vector<double> tail_mass;
  bool truncation_unreliable = false;
  /// First time whose tail mass exceeds the threshold, or a negative value.
  double first_flag_time = -1.0;
};

/// Works from retained states, or from a batch that tracked regularity_tracked_ops(c_op).
RegularityTrace regularity_trace(const TrajectoryBatch& batch, const Op& c_op);

/// C^*C and the projector onto the top three basis indices.
std::vector<Op> regularity_tracked_ops(const Op& c_op);

enum class InequalityKind { nonexplosion_i2, hyp61, hypL };

const char* to_string(InequalityKind kind);
InequalityKind parse_inequality_kind(const std::string& text);

struct LyapunovReport {
  InequalityKind inequality_kind = InequalityKind::hyp61;
  double estimated_K = 0;
  /// Against the supplied K when given, otherwise against estimated_K.
  double max_violation = 0;
  double reference_K = 0;
  std::optional<Op> D;
  std::size_t basis_probes = 0;
  std::size_t random_probes = 0;
  /// Index of the basis vector attaining estimated_K, or -1 if a random probe attained it.
  long argmax_basis_index = -1;
  std::string sample_description;
};

struct DissipativityOptions {
  std::optional<double> K;
  std::optional<Op> D;
};

/// 2 Re<C^2 x, G x> + sum_k ||C L_k x||^2
double dissipativity_lhs(const ModelSpec& model, const Op& c_op, const Vector& x);

LyapunovReport check_dissipativity(const ModelSpec& model, const Op& c_op, InequalityKind kind, int probes,
                                   std::uint64_t seed, const DissipativityOptions& options = {});

bool kerr_regularity_predicate(Complex alpha4, Complex alpha5);
bool kerr_stationary_predicate(Complex alpha1, Complex alpha2, Complex alpha4, Complex alpha5, int p);

}  // namespace qtraj

#endif  // QTRAJ_REGULARITY_HPP
