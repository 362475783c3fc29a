#include "twoaxis/experiments.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

using namespace twoaxis;
using Catch::Matchers::WithinAbs;

TEST_CASE("least squares recovers an exact line", "[experiments]") {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{1.5, -0.5, -2.5, -4.5};
  const auto f = least_squares(x, y);
  CHECK_THAT(f.slope, WithinAbs(-2.0, 1e-14));
  CHECK_THAT(f.intercept, WithinAbs(3.5, 1e-14));
  CHECK_THAT(f.r_squared, WithinAbs(1.0, 1e-14));
  const std::vector<double> same{2, 2};
  CHECK_THROWS_AS(least_squares(same, std::vector<double>{1, 2}), Error);
}

TEST_CASE("parallel_for stores results by index", "[experiments]") {
  std::vector<int> out(257, -1);
  parallel_for(out.size(), 4, [&](std::size_t i) { out[i] = static_cast<int>(i * i % 97); });
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i * i % 97));
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 7) fail(ErrorCategory::numerical, "boom");
                  }),
                  Error);
}

TEST_CASE("sweep points give t_m > 0 and xi^2 < 1", "[experiments][property]") {
  const auto r = sweep_chi({-1.0, -0.6, -0.2, 0.0, 0.4}, 12);
  REQUIRE(r.axis_values.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(r.t_m[i] > 0.0);
    CHECK(r.xi_m_squared[i] < 1.0);
  }
  CHECK(r.metadata["argmin_chi"].get<double>() == r.axis_values[r.argmin()]);
}

TEST_CASE("sweeps reject unsorted grids", "[experiments]") {
  CHECK_THROWS_AS(sweep_chi({0.0, -1.0}, 10), Error);
  CHECK_THROWS_AS(sweep_omega0({}, -1.0, 10), Error);
  CHECK_THROWS_AS(sweep_scaling({20, 10}, 0.0, 0.0), Error);
}

TEST_CASE("sweep results do not depend on the thread count", "[experiments]") {
  SweepOptions one, many;
  one.threads = 1;
  many.threads = 4;
  const std::vector<double> grid{0.0, 0.5, 1.0, 2.0, 3.0};
  const auto a = sweep_omega0(grid, -0.3, 16, one);
  const auto b = sweep_omega0(grid, -0.3, 16, many);
  CHECK(a.xi_m_squared == b.xi_m_squared);
  CHECK(a.t_m == b.t_m);
}

TEST_CASE("sweep_scaling warns about short fits", "[experiments]") {
  const auto fit = sweep_scaling({10, 20, 40}, 0.0, 0.0);
  REQUIRE_FALSE(fit.warnings.empty());
  CHECK(fit.warnings.front().rfind("low_point_count", 0) == 0);
  CHECK(fit.slope < 0.0);
  CHECK(fit.n_values.size() == 3);
}

TEST_CASE("the three sweeps agree at chi = -1, omega_0 = 0, N = 100", "[experiments][property]") {
  const double a = sweep_omega0({0.0, 1.0}, -1.0, 100).xi_m_squared[0];
  const double b = sweep_chi({-1.0, -0.5}, 100).xi_m_squared[0];
  const double c = sweep_scaling({100, 110}, -1.0, 0.0).xi_m_squared[0];
  CHECK(std::abs(a - b) < 1e-6);
  CHECK(std::abs(a - c) < 1e-6);
}

TEST_CASE("uncoupled cavities converge at cutoff 1 with empty modes", "[experiments]") {
  TwoModeDickeParams eff{50.0, 60.0, 1.0, 0.0, 0.0, 6, 0.0};
  const auto rep = convergence_audit(eff, uniform_grid(0.0, 1.0, 21));
  CHECK(rep.converged);
  CHECK(rep.converged_cutoff == 1);
  CHECK(rep.max_photons_a == 0.0);
  CHECK(rep.max_photons_b == 0.0);
  CHECK(rep.flags.empty());
}

TEST_CASE("non-dispersive couplings need larger cutoffs and carry a warning", "[experiments]") {
  TwoModeDickeParams weak{40.0, 40.0, 1.0, 1.0, 0.5, 4, 0.0};
  TwoModeDickeParams strong{2.0, 2.0, 1.0, 1.0, 1.0, 4, 0.0};  // lambda / |omega| = 0.5
  const auto times = uniform_grid(0.0, 2.0, 41);
  AuditOptions opt;
  opt.max_doublings = 4;
  const auto a = convergence_audit(weak, times, opt);
  const auto b = convergence_audit(strong, times, opt);
  CHECK(a.verdict.dispersive);
  CHECK_FALSE(b.verdict.dispersive);
  CHECK(std::find(b.flags.begin(), b.flags.end(), std::string(flags::kNotDispersive)) != b.flags.end());
  REQUIRE(a.converged);
  CHECK((!b.converged || b.converged_cutoff > a.converged_cutoff));
}

TEST_CASE("photon numbers follow the dispersive estimate", "[experiments]") {
  // a = -lambda_1 Jx / omega_A  =>  <a+a> ~ lambda_1^2 <Jx^2> / omega_A^2.
  TwoModeDickeParams eff{100.0, -100.0, 1.0, 2.0, 1.0, 6, 0.0};
  const auto times = uniform_grid(0.0, 1.0, 21);
  const auto rep = convergence_audit(eff, times);
  REQUIRE(rep.converged);
  REQUIRE(rep.dispersive_photons_a.size() == times.size());
  double est = 0, got = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    est += rep.dispersive_photons_a[k];
    got += rep.finest.photons_a[k];
  }
  // Time averages agree to leading order; transients from the sudden start add at most ~2x.
  CHECK(got > 0.25 * est);
  CHECK(got < 4.0 * est);
}

TEST_CASE("full and effective models agree deep in the dispersive regime", "[experiments]") {
  TwoModeDickeParams eff{200.0, 200.0, 1.0, 2.0, 1.0, 6, 0.0};
  CompareOptions opt;
  opt.grid_points = 401;
  const auto r = compare_full_vs_effective(eff, opt);
  CHECK(r.first_minimum_time > 0.0);
  CHECK(r.max_abs_deviation < 0.05);
  CHECK(r.audit.converged);
  CHECK(r.full.times == r.effective.times);
}

TEST_CASE("first_local_minimum", "[experiments]") {
  CHECK(first_local_minimum({1.0, 0.9, 0.8, 0.85, 0.7, 0.9}) == 2);
  CHECK(first_local_minimum({1.0, 1.0, 1.0}) == static_cast<std::size_t>(-1));
}
