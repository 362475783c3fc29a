#include "oracles.hpp"
#include "twoaxis/model_builder.hpp"

#include <catch_amalgamated.hpp>

using namespace twoaxis;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// A matched drive: equal shifts and couplings on both branches of each pair.
RamanDriveParams matched_drive() {
  RamanDriveParams r;
  r.coupling_g_r = {20.0, 15.0};
  r.coupling_g_s = {20.0, 15.0};
  r.rabi_r = {20.0, 10.0};
  r.rabi_s = {20.0, 10.0};
  r.detuning_r = {100.0, 120.0};
  r.detuning_s = {100.0, 120.0};
  r.phase_r = {0.0, 0.5 * kPi};
  r.phase_s = {0.0, -0.5 * kPi};
  r.cavity_detuning_a = -30.0;
  r.cavity_detuning_b = 25.0;
  r.atomic_detuning_1 = 0.3;
  r.atom_count = 10;
  return r;
}

}  // namespace

TEST_CASE("effective parameters from a matched drive", "[model]") {
  const auto raw = matched_drive();
  const auto d = derive_effective_params(raw);
  const auto& p = d.params;
  // Independent arithmetic.
  CHECK_THAT(p.lambda_1, WithinRel(20.0 * 20.0 / 200.0, 1e-14));
  CHECK_THAT(p.lambda_2, WithinRel(15.0 * 10.0 / 240.0, 1e-14));
  CHECK_THAT(p.omega_a_eff, WithinRel(-30.0 + 5.0 * (4.0 + 4.0), 1e-14));
  CHECK_THAT(p.omega_b_eff, WithinRel(25.0 + 5.0 * (225.0 / 120.0 * 2), 1e-14));
  CHECK_THAT(p.omega_0, WithinAbs(0.3, 1e-14));  // r and s light shifts cancel
  CHECK_THAT(p.eta, WithinAbs(0.0, 1e-14));
  CHECK(d.validation.matched_conditions);
  CHECK(d.validation.phase_convention);
  // |Delta| / max(|Omega|, |g|) = 100 / 20 on pair 1.
  CHECK_THAT(d.validation.worst_detuning_ratio, WithinRel(5.0, 1e-14));
  CHECK_FALSE(d.validation.large_detuning);
  CHECK(derive_effective_params(raw, 4.0).validation.large_detuning);
  CHECK_FALSE(d.validation.lambda_sign_absorbed[0]);
}

TEST_CASE("zero detuning is a validation error naming the field", "[model]") {
  auto raw = matched_drive();
  raw.detuning_s[1] = 0.0;
  try {
    derive_effective_params(raw);
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::validation);
    CHECK(std::string(e.what()).find("detuning_s[2]") != std::string::npos);
  }
}

TEST_CASE("negative couplings are folded into |lambda| and recorded", "[model]") {
  auto raw = matched_drive();
  raw.detuning_s[0] = -100.0;
  raw.detuning_r[0] = -100.0;
  const auto d = derive_effective_params(raw);
  CHECK(d.params.lambda_1 > 0);
  CHECK(d.validation.lambda_sign_absorbed[0]);
}

TEST_CASE("unmatched drives produce nonzero eta and cannot build the Dicke model", "[model]") {
  auto raw = matched_drive();
  raw.coupling_g_r[0] = 25.0;
  const auto d = derive_effective_params(raw);
  CHECK_FALSE(d.validation.matched_conditions);
  CHECK(std::abs(d.params.eta) > 1.0);
  try {
    build_two_mode_dicke(d.params, 2, 2);
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::validation);
  }
}

TEST_CASE("map_to_two_axis closed forms and verdicts", "[model]") {
  TwoModeDickeParams eff{200.0, -200.0, 1.0, 2.0, 1.0, 15, 0.0};
  const auto m = map_to_two_axis(eff);
  CHECK_THAT(m.params.q, WithinRel(-4.0 / 200.0, 1e-14));
  CHECK_THAT(m.params.chi, WithinRel(200.0 * 1.0 / (-200.0 * 4.0), 1e-14));
  CHECK(m.verdict.dispersive);
  CHECK_THAT(m.verdict.ratio, WithinRel(100.0, 1e-14));

  TwoModeDickeParams near{1.0, 1.0, 1.0, 0.5, 0.5, 4, 0.0};
  CHECK_FALSE(map_to_two_axis(near).verdict.dispersive);

  TwoModeDickeParams zero_wa{0.0, 1.0, 1.0, 1.0, 1.0, 4, 0.0};
  CHECK_THROWS_AS(map_to_two_axis(zero_wa), Error);

  TwoModeDickeParams swap{100.0, 100.0, 0.0, 0.0, 1.0, 4, 0.0};
  try {
    map_to_two_axis(swap);
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("swap") != std::string::npos);
  }

  TwoModeDickeParams uncoupled{100.0, 100.0, 0.0, 0.0, 0.0, 4, 0.0};
  const auto u = map_to_two_axis(uncoupled);
  CHECK(u.params.q == 0.0);
  CHECK(u.params.chi == 0.0);
}

TEST_CASE("two-mode Dicke Hamiltonian is Hermitian and parity conserving", "[model]") {
  TwoModeDickeParams eff{7.0, -5.0, 1.3, 0.8, 0.6, 3, 0.0};
  const auto h = build_two_mode_dicke(eff, 4, 3);
  CHECK(h.matrix.rows() == 4 * 5 * 4);
  CHECK(hermiticity_residual(h.matrix) < 1e-14);
  const Matrix dense(h.matrix);
  for (Eigen::Index r = 0; r < dense.rows(); ++r)
    for (Eigen::Index c = 0; c < dense.cols(); ++c)
      if (h.parity_sector[static_cast<std::size_t>(r)] != h.parity_sector[static_cast<std::size_t>(c)])
        CHECK(dense(r, c) == Complex(0.0));
}

TEST_CASE("N = 1 Dicke Hamiltonian matches an explicit 8x8 construction", "[model][oracle]") {
  TwoModeDickeParams eff{3.0, 2.0, 0.7, 0.4, 0.9, 1, 0.0};
  const auto h = build_two_mode_dicke(eff, 1, 1);
  // Hand-built from 2x2 blocks: spin-1/2 operators and a two-level mode.
  oracle::Mat sx(2, 2), sy(2, 2), sz(2, 2), a(2, 2), id = oracle::Mat::Identity(2, 2);
  sx << 0, 0.5, 0.5, 0;
  sy << 0, oracle::C(0, 0.5), oracle::C(0, -0.5), 0;
  sz << -0.5, 0, 0, 0.5;
  a << 0, 1, 0, 0;
  auto kron3 = [](const oracle::Mat& x, const oracle::Mat& y, const oracle::Mat& z) {
    oracle::Mat xy(4, 4), out(8, 8);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) xy.block(2 * i, 2 * j, 2, 2) = x(i, j) * y;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) out.block(2 * i, 2 * j, 2, 2) = xy(i, j) * z;
    return out;
  };
  const oracle::Mat n = a.adjoint() * a, xa = a + a.adjoint();
  const oracle::Mat ref = 3.0 * kron3(id, n, id) + 2.0 * kron3(id, id, n) + 0.7 * kron3(sz, id, id) +
                          0.4 * kron3(sx, xa, id) + 0.9 * kron3(sy, id, xa);
  CHECK(max_abs(Matrix(Matrix(h.matrix) - ref)) < 1e-14);
}

TEST_CASE("dimension guard", "[model]") {
  TwoModeDickeParams eff{7.0, -5.0, 1.0, 0.5, 0.5, 100, 0.0};
  try {
    build_two_mode_dicke(eff, 50, 50, 10000);
    FAIL("expected a dimension error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::dimension);
  }
}

TEST_CASE("two-axis Hamiltonian conserves spin parity", "[model]") {
  for (int n : {2, 5, 20}) {
    const auto ops = build_spin_ops(n);
    const Matrix h = build_two_axis(TwoAxisParams{1.0, -0.37, 0.8, n}, ops);
    CHECK(hermiticity_residual(h) == 0.0);
    CHECK(max_abs(Matrix(commutator(h, parity_operator(ops)))) < 1e-12);
  }
  CHECK_THROWS_AS(build_two_axis(TwoAxisParams{1.0, 0.0, 0.0, 4}, build_spin_ops(5)), Error);
}

TEST_CASE("chi <-> 1/chi duality preserves the spectrum", "[model]") {
  // A quarter turn about z maps Jx -> Jy, so q(Jx^2 + chi Jy^2) and
  // q chi (Jx^2 + Jy^2 / chi) are unitarily equivalent.
  for (double chi : {-0.5, -2.0, 0.3, 4.0}) {
    const int n = 12;
    const Matrix h1 = build_two_axis(TwoAxisParams{1.0, chi, 0.7, n});
    const Matrix h2 = build_two_axis(TwoAxisParams{chi, 1.0 / chi, 0.7, n});
    const auto e1 = Eigen::SelfAdjointEigenSolver<Matrix>(h1).eigenvalues();
    const auto e2 = Eigen::SelfAdjointEigenSolver<Matrix>(h2).eigenvalues();
    CHECK((e1 - e2).cwiseAbs().maxCoeff() < 1e-10);
  }
}
