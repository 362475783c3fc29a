#include "oracles.hpp"
#include "twoaxis/model_builder.hpp"
#include "twoaxis/propagator.hpp"
#include "twoaxis/squeezing_metrics.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace twoaxis;
using Catch::Matchers::WithinAbs;

TEST_CASE("coherent spin state has xi^2 = 1", "[squeezing][property]") {
  for (int n : {1, 2, 7, 100}) {
    const auto ops = build_spin_ops(n);
    CHECK_THAT(squeezing_factor(coherent_state_down(n), ops), WithinAbs(1.0, 1e-12));
    const auto f = mean_spin_frame(coherent_state_down(n), ops);
    CHECK_THAT(f.theta, WithinAbs(kPi, 1e-12));
    CHECK(f.phi == 0.0);
  }
}

TEST_CASE("mean-spin frame is orthonormal with n0 along <J>", "[squeezing]") {
  std::mt19937_64 rng(11);
  const auto ops = build_spin_ops(6);
  const SpinMomentEvaluator ev(ops);
  for (int trial = 0; trial < 20; ++trial) {
    const QuantumState psi(oracle::random_state(7, rng), BasisSpec{7, {}});
    const auto m = ev(psi);
    const auto f = mean_spin_frame(m);
    const Mat3 frame = (Mat3() << f.n0, f.n1, f.n2).finished();
    CHECK((frame.transpose() * frame - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((f.n0 * f.j_length - m.mean).norm() < 1e-12);
    CHECK(f.phi >= 0.0);
    CHECK(f.phi < 2 * kPi);
  }
}

TEST_CASE("closed-form minimum equals a brute-force angle scan on evolved states", "[squeezing][oracle]") {
  // 100 states: random initial vectors evolved under random two-axis Hamiltonians.
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  const int n = 10;
  const auto ops = build_spin_ops(n);
  const auto ref = oracle::collective_spin_from_qubits(n);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix h = build_two_axis(TwoAxisParams{u(rng), u(rng), u(rng), n}, ops);
    const Vector v0 = oracle::random_state(n + 1, rng);
    const Propagator prop(to_sparse(h), v0, EvolutionMethod::spectral);
    const QuantumState psi(prop.state_at(std::abs(u(rng)) * 2.0), BasisSpec{n + 1, {}});
    const double closed = 0.25 * n * squeezing_factor(psi, ops);
    const double scanned = oracle::scanned_min_variance(ref, psi.amplitudes());
    CHECK(std::abs(closed - scanned) <= 1e-10);
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("N = 2 two-axis trace matches the 3x3 closed form", "[squeezing][oracle]") {
  const auto ops = build_spin_ops(2);
  for (double chi : {-1.0, -0.3, 0.0}) {
    const Matrix h = build_two_axis(TwoAxisParams{1.0, chi, 0.0, 2}, ops);
    const Propagator prop(to_sparse(h), coherent_state_down(2).amplitudes(), EvolutionMethod::spectral);
    // Stay clear of (1 - chi) t = pi / 2, where <J> vanishes.
    const double t_end = 0.95 * 0.5 * kPi / (1.0 - chi);
    const auto times = uniform_grid(0.0, t_end, 101);
    const auto tr = squeezing_trace(prop, BasisSpec{3, {}}, SpinMomentEvaluator(ops), times);
    for (std::size_t k = 0; k < times.size(); ++k)
      CHECK(std::abs(tr.xi_squared[k] - oracle::n2_two_axis_xi2(1.0, chi, times[k])) <= 1e-9);
  }
}

TEST_CASE("squeezing is invariant under a global rotation of the state", "[squeezing][property]") {
  std::mt19937_64 rng(5);
  const int n = 8;
  const auto ops = build_spin_ops(n);
  for (int trial = 0; trial < 10; ++trial) {
    const QuantumState psi(oracle::random_state(n + 1, rng), BasisSpec{n + 1, {}});
    const Matrix rot = (Complex(0, -0.7) * ops.jy).exp() * (Complex(0, -1.9) * ops.jz).exp();
    const QuantumState rotated(rot * psi.amplitudes(), psi.basis());
    CHECK_THAT(squeezing_factor(rotated, ops), WithinAbs(squeezing_factor(psi, ops), 1e-10));
  }
}

TEST_CASE("reduced moments of a product state equal the spin-only moments", "[squeezing]") {
  std::mt19937_64 rng(9);
  const int n = 5;
  const auto ops = build_spin_ops(n);
  const Vector spin = oracle::random_state(n + 1, rng);
  const Vector field = oracle::random_state(12, rng);
  Vector product(spin.size() * field.size());
  for (Eigen::Index s = 0; s < spin.size(); ++s) product.segment(s * field.size(), field.size()) = spin(s) * field;
  const SpinMomentEvaluator ev(ops);
  const auto a = ev(spin, BasisSpec{n + 1, {}});
  const auto b = ev(product, BasisSpec{n + 1, {3, 4}});
  CHECK((a.mean - b.mean).norm() < 1e-12);
  CHECK((a.second - b.second).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("degenerate frame raises and samples fall back to the full covariance", "[squeezing]") {
  const int n = 2;
  const auto ops = build_spin_ops(n);
  Vector v = Vector::Zero(3);
  v(0) = v(2) = 1.0 / std::sqrt(2.0);  // <J> = 0
  const QuantumState psi(v, BasisSpec{3, {}});
  try {
    squeezing_factor(psi, ops);
    FAIL("expected a degenerate-frame error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::degenerate_frame);
  }
  const auto s = squeezing_sample(SpinMomentEvaluator(ops)(psi));
  CHECK(s.degenerate);
  CHECK(std::isnan(s.angle));
  CHECK(std::isfinite(s.xi_squared));
}

TEST_CASE("find_max_squeezing refines below the coarse grid", "[squeezing]") {
  const auto ops = build_spin_ops(4);
  const Matrix h = build_two_axis(TwoAxisParams{1.0, -1.0, 0.0, 4}, ops);
  SearchOptions opt;
  opt.t_max = default_search_window(1.0, 4);
  const auto tr = find_max_squeezing(h, coherent_state_down(4), ops, opt, spin_parity_sectors(4));
  CHECK(tr.summary.xi_m_squared < 1.0);
  CHECK(tr.summary.t_m > 0.0);
  // The refined value is no worse than any grid sample.
  for (double x : tr.xi_squared) CHECK(tr.summary.xi_m_squared <= x + 1e-12);
}

TEST_CASE("search flags no squeezing for a pure Jz Hamiltonian", "[squeezing]") {
  const auto ops = build_spin_ops(10);
  const Matrix h = build_two_axis(TwoAxisParams{0.0, 0.0, 1.0, 10}, ops);
  SearchOptions opt;
  opt.t_max = 3.0;
  const auto tr = find_max_squeezing(h, coherent_state_down(10), ops, opt);
  CHECK(tr.has_flag(flags::kNoSqueezing));
  CHECK_THAT(tr.summary.xi_m_squared, WithinAbs(1.0, 1e-12));
}

TEST_CASE("search extends a window that ends on a falling trace", "[squeezing]") {
  const int n = 50;
  const auto ops = build_spin_ops(n);
  const Matrix h = build_two_axis(TwoAxisParams{1.0, -1.0, 0.0, n}, ops);
  SearchOptions opt;
  opt.t_max = 0.1 * default_search_window(1.0, n);
  const auto tr = find_max_squeezing(h, coherent_state_down(n), ops, opt, spin_parity_sectors(n));
  CHECK((tr.has_flag(flags::kWindowExtended) || tr.has_flag(flags::kMinimumAtBoundary)));
  opt.auto_extend = false;
  opt.t_max = 0.03 * default_search_window(1.0, n);
  const auto short_tr = find_max_squeezing(h, coherent_state_down(n), ops, opt, spin_parity_sectors(n));
  CHECK(short_tr.has_flag(flags::kMinimumAtBoundary));
}
