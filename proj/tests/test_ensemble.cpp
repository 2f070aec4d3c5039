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

#include "qtraj/ensemble.hpp"
#include "qtraj/oracle.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace qtraj;

namespace {

ModelSpec closed(int d, const Matrix& h) {
  return make_model(FockSpace(d), {h, "H"}, {}, {test::number(d), "N"}, d - 1, "closed");
}

}  // namespace

TEST_CASE("single trajectory ensemble matches simulate_trajectory") {
  const auto m = build_thermal_oscillator(FockSpace(10), 1.0, 0.5);
  const PureState x(FockSpace(10).basis(1));
  const TimeGrid g(0.5, 1e-2, 10);
  for (SseKind kind : {SseKind::linear, SseKind::nonlinear}) {
    const auto batch = run_ensemble(m, point_mass(x), g, 1, 123, kind);
    const auto tr = simulate_trajectory(m, x, g, kind, NoiseStream(123, 0));
    REQUIRE(batch.states.size() == tr.saved_states.size());
    for (std::size_t s = 0; s < tr.saved_states.size(); ++s) CHECK(batch.states[s][0] == tr.saved_states[s].second.vec);
  }
}

TEST_CASE("accumulators are identical for any thread count") {
  const auto m = build_thermal_oscillator(FockSpace(12), 1.0, 0.5);
  const PureState x(FockSpace(12).basis(2));
  const TimeGrid g(0.3, 1e-2, 10);
  EnsembleOptions one, eight;
  eight.threads = 8;
  const auto a = run_ensemble(m, point_mass(x), g, 150, 77, SseKind::linear, one);
  const auto b = run_ensemble(m, point_mass(x), g, 150, 77, SseKind::linear, eight);
  REQUIRE(a.dyad_sums.size() == b.dyad_sums.size());
  for (std::size_t s = 0; s < a.dyad_sums.size(); ++s) CHECK(a.dyad_sums[s] == b.dyad_sums[s]);
  CHECK(a.norms_sq == b.norms_sq);
  const Op n = build_fock_ops(m.space).n;
  CHECK(observable_mean(a, n, 0.3).value == observable_mean(b, n, 0.3).value);
}

TEST_CASE("linear norm is a martingale") {
  const auto m = build_thermal_oscillator(FockSpace(16), 1.0, 0.5);
  const PureState x(FockSpace(16).basis(1));
  const auto batch = run_ensemble(m, point_mass(x), TimeGrid(1.0, 1e-3, 100), 2000, 5, SseKind::linear,
                                  {false, {}, 1});
  for (double t : batch.times) {
    const auto e = norm_mean(batch, t);
    CHECK(std::abs(e.value.real() - 1.0) <= 3.0 * e.stderr + 1e-12);
  }
}

TEST_CASE("reconstruction") {
  SUBCASE("t = 0 is the initial projector") {
    const auto m = build_thermal_oscillator(FockSpace(8), 1.0, 0.5);
    std::mt19937_64 rng(2);
    const Vector x = test::random_unit(8, rng);
    const auto batch = run_ensemble(m, point_mass(PureState(x)), TimeGrid(0.1, 0.01, 5), 20, 1, SseKind::linear);
    CHECK(max_abs(reconstruct_density(batch, 0.0).matrix - x * x.adjoint()) < 1e-15);
  }
  SUBCASE("noise-free closed model is deterministic") {
    const int d = 6;
    const Matrix h = test::closed_hamiltonian(d, 0.8);
    const auto m = closed(d, h);
    std::mt19937_64 rng(3);
    const Vector x = test::random_unit(d, rng);
    const TimeGrid g(0.5, 1e-3, 100);
    const auto batch = run_ensemble(m, point_mass(PureState(x)), g, 10, 1, SseKind::nonlinear);
    const auto single = simulate_trajectory(m, PureState(x), g, SseKind::nonlinear, NoiseStream(0, 0));
    const Vector y = single.saved_states.back().second.vec;
    CHECK(max_abs(reconstruct_density(batch, 0.5).matrix - y * y.adjoint()) < 1e-14);
    const Vector exact = test::diagonal_unitary(h, 0.5) * x;
    CHECK(max_abs(y * y.adjoint() - exact * exact.adjoint()) < 5e-3);
  }
  SUBCASE("thermal ensemble tracks the master equation") {
    const int d = 16;
    const auto m = build_thermal_oscillator(FockSpace(d), 1.0, 0.5);
    const PureState x(FockSpace(d).basis(0));
    const auto batch = run_ensemble(m, point_mass(x), TimeGrid(1.0, 1e-3, 1000), 2000, 9, SseKind::nonlinear,
                                    {false, {}, 1});
    const auto est = reconstruct_density(batch, 1.0);
    const Matrix exact = propagate_master(m, x.vec * x.vec.adjoint(), 1.0);
    CHECK(trace_norm(hermitian_part(est.matrix - exact)) <= 3.0 * std::sqrt(double(d)) * est.stderr_scale + 1e-2);
  }
}

TEST_CASE("observable means") {
  const auto m = build_thermal_oscillator(FockSpace(16), 1.0, 0.5);
  const PureState x(FockSpace(16).basis(0));
  const Op id{Matrix::Identity(16, 16), "I"};
  const Op n = build_fock_ops(m.space).n;
  SUBCASE("identity under the nonlinear kind is exactly one") {
    const auto batch = run_ensemble(m, point_mass(x), TimeGrid(0.5, 1e-2, 10), 200, 4, SseKind::nonlinear);
    const auto e = observable_mean(batch, id, 0.5);
    CHECK(std::abs(e.value - 1.0) < 1e-14);
    CHECK(e.stderr < 1e-14);
  }
  SUBCASE("number relaxes to nu") {
    EnsembleOptions opt;
    opt.retain_states = false;
    opt.tracked = {n};
    const auto batch = run_ensemble(m, point_mass(x), TimeGrid(8.0, 1e-2, 800), 1000, 4, SseKind::nonlinear, opt);
    const auto e = observable_mean(batch, n, 8.0);
    CHECK(std::abs(e.value.real() - 0.5) <= 3.0 * e.stderr);
    CHECK_THROWS(observable_mean(batch, id, 8.0));
  }
  SUBCASE("times off the save grid are rejected") {
    const auto batch = run_ensemble(m, point_mass(x), TimeGrid(0.5, 1e-2, 10), 4, 4, SseKind::linear);
    CHECK_THROWS_AS(observable_mean(batch, n, 0.05), std::out_of_range);
  }
}

TEST_CASE("too many faults abort the ensemble") {
  KerrParams kp;
  kp.alpha[4] = 3.0;
  const auto m = build_kerr_oscillator(FockSpace(10), kp);
  CHECK_THROWS_AS(run_ensemble(m, point_mass(PureState(FockSpace(10).basis(3))), TimeGrid(100.0, 0.5, 200), 10, 1,
                               SseKind::linear),
                  EnsembleFault);
}

TEST_CASE("weighted equivalence") {
  const auto thermal = build_thermal_oscillator(FockSpace(16), 1.0, 0.5);
  const Op n = build_fock_ops(thermal.space).n;
  const PureState x(FockSpace(16).basis(1));
  SUBCASE("t = 0 gives the initial expectation on both sides") {
    const auto rep = weighted_equivalence_check(thermal, x, 0.0, 50, 3, n);
    CHECK(rep.lhs == 1.0);
    CHECK(rep.rhs == 1.0);
  }
  SUBCASE("closed model") {
    const int d = 8;
    const Matrix h = test::closed_hamiltonian(d, 1.0) + 0.2 * (test::ladder(d) + test::ladder(d).adjoint());
    const auto m = closed(d, h);
    std::mt19937_64 rng(6);
    const PureState y(test::random_unit(d, rng));
    EquivalenceOptions opt;
    opt.dt = 1e-4;
    const auto rep = weighted_equivalence_check(m, y, 0.5, 20, 3, {test::number(d), "N"}, opt);
    const Matrix exact = solve_heisenberg(m, {test::number(d), "N"}, {0.0, 0.5}).values[1];
    const double want = expectation(y.vec, exact).real();
    CHECK(rep.lhs == doctest::Approx(want).epsilon(1e-2));
    CHECK(rep.rhs == doctest::Approx(want).epsilon(1e-2));
    CHECK(rep.combined_stderr < 1e-12);
  }
  SUBCASE("weakly coupled thermal model agrees within three sigma") {
    // The norm weights are close to log-normal with a variance that grows with the rate, so a
    // small rate keeps the weighted estimator well behaved at this budget.
    const auto weak = build_thermal_oscillator(FockSpace(16), 0.25, 0.5);
    const PureState vac(FockSpace(16).basis(0));
    const auto rep = weighted_equivalence_check(weak, vac, 1.0, 1000, 8, n);
    CHECK(rep.agrees());
    const double exact = (n.matrix * propagate_master(weak, vac.vec * vac.vec.adjoint(), 1.0)).trace().real();
    CHECK(std::abs(rep.rhs - exact) <= 3.0 * rep.rhs_stderr + 5e-3);
    CHECK(std::abs(rep.lhs - exact) <= 3.0 * rep.lhs_stderr + 5e-3);
  }
  CHECK_THROWS(weighted_equivalence_check(thermal, PureState(2.0 * x.vec), 1.0, 10, 1, n));
}

TEST_CASE("pairwise reduction") {
  std::mt19937_64 rng(1);
  std::vector<Matrix> terms;
  PairwiseSum acc;
  Matrix naive = Matrix::Zero(3, 3);
  for (int k = 0; k < 37; ++k) {
    terms.push_back(test::random_matrix(3, rng));
    acc.add(terms.back());
    naive += terms.back();
  }
  CHECK(max_abs(acc.total(3, 3) - naive) < 1e-12);
  CHECK(max_abs(pairwise_reduce(terms, 3, 3) - naive) < 1e-12);
  CHECK(pairwise_reduce({}, 2, 2) == Matrix::Zero(2, 2));
  CHECK(PairwiseSum().total(2, 2) == Matrix::Zero(2, 2));
}
