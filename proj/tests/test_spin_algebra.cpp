#include "oracles.hpp"
#include "twoaxis/spin_algebra.hpp"

#include <catch_amalgamated.hpp>

using namespace twoaxis;
using Catch::Matchers::WithinAbs;

TEST_CASE("spin operators satisfy the su(2) algebra", "[spin]") {
  for (int n : {1, 2, 3, 10, 51, 100}) {
    const auto s = build_spin_ops(n);
    const double j = 0.5 * n;
    CHECK(max_abs(Matrix(commutator(s.jx, s.jy) - kI * s.jz)) < 1e-10);
    CHECK(max_abs(Matrix(commutator(s.jy, s.jz) - kI * s.jx)) < 1e-10);
    CHECK(max_abs(Matrix(commutator(s.jz, s.jx) - kI * s.jy)) < 1e-10);
    const Matrix casimir = s.jx * s.jx + s.jy * s.jy + s.jz * s.jz;
    CHECK(max_abs(Matrix(casimir - j * (j + 1) * Matrix::Identity(n + 1, n + 1))) < 1e-9);
    CHECK(hermiticity_residual(s.jx) == 0.0);
    CHECK(hermiticity_residual(s.jy) == 0.0);
  }
}

TEST_CASE("ladder conventions for N = 2", "[spin]") {
  const auto s = build_spin_ops(2);
  // m = -1, 0, 1 in ascending order; J+ |-1> = sqrt(2) |0>.
  CHECK(s.jz(0, 0) == Complex(-1.0));
  CHECK(s.jz(2, 2) == Complex(1.0));
  CHECK_THAT(s.jplus(1, 0).real(), WithinAbs(std::sqrt(2.0), 1e-15));
  CHECK_THAT(s.jplus(2, 1).real(), WithinAbs(std::sqrt(2.0), 1e-15));
  CHECK(s.jplus(0, 0) == Complex(0.0));
  CHECK(max_abs(Matrix(s.jminus - s.jplus.adjoint())) == 0.0);
}

TEST_CASE("operators match the projected qubit construction", "[spin][oracle]") {
  for (int n : {1, 2, 3, 4, 6}) {
    const auto ref = oracle::collective_spin_from_qubits(n);
    const auto s = build_spin_ops(n);
    CHECK(max_abs(Matrix(s.jx - ref.jx)) < 1e-12);
    CHECK(max_abs(Matrix(s.jy - ref.jy)) < 1e-12);
    CHECK(max_abs(Matrix(s.jz - ref.jz)) < 1e-12);
  }
}

TEST_CASE("coherent state and parity", "[spin]") {
  const auto psi = coherent_state_down(7);
  CHECK(psi.dimension() == 8);
  CHECK(psi.amplitudes()(0) == Complex(1.0));
  CHECK(psi.spin_only());
  const auto s = build_spin_ops(7);
  const Matrix p = parity_operator(s);
  // P = exp(i pi (Jz + j))
  for (int k = 0; k <= 7; ++k) CHECK_THAT(std::real(std::exp(kI * kPi * (s.m(k) + s.j)) - p(k, k)), WithinAbs(0.0, 1e-12));
  CHECK(max_abs(Matrix(p * s.jx * p + s.jx)) < 1e-12);  // P anticommutes with Jx and Jy
  CHECK(max_abs(Matrix(p * s.jy * p + s.jy)) < 1e-12);
}

TEST_CASE("invalid atom numbers are rejected", "[spin]") {
  CHECK_THROWS_AS(build_spin_ops(0), Error);
  CHECK_THROWS_AS(build_spin_ops(-3), Error);
  CHECK_THROWS_AS(coherent_state_down(0), Error);
  try {
    build_spin_ops(0);
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::invalid_argument);
  }
}

TEST_CASE("QuantumState validates its layout and norm", "[spin]") {
  Vector v = Vector::Zero(12);
  v(3) = 1.0;
  CHECK_NOTHROW(QuantumState(v, BasisSpec{3, {2, 2}}));
  CHECK_THROWS_AS(QuantumState(v, BasisSpec{3, {2}}), Error);
  Vector w = v * 1.01;
  try {
    QuantumState(w, BasisSpec{3, {2, 2}});
    FAIL("expected a norm error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::numerical);
  }
  CHECK(BasisSpec{3, {2, 5}}.field_dimension() == 10);
}
