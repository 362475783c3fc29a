#pragma once

// Drivers for the headline results: full two-mode Dicke vs two-axis
// comparison, Fock-cutoff audit, N-scaling fits, chi and omega_0 sweeps.
//
// Sweep points are independent and run on a small thread pool; results are
// always stored by axis position, never by completion order.

#include "twoaxis/error.hpp"
#include "twoaxis/model_builder.hpp"
#include "twoaxis/propagator.hpp"
#include "twoaxis/spin_algebra.hpp"
#include "twoaxis/squeezing_metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace twoaxis {

inline constexpr const char* kLibraryVersion = "1.0.0";

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 = hardware).
inline void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  pool.clear();
  if (error) std::rethrow_exception(error);
}

struct SweepOptions {
  int grid_points = 2001;
  double relative_tolerance = 1e-6;
  double window_override = 0.0;  // 0: use |q| T N = 4 pi
  unsigned threads = 0;
};

inline nlohmann::json to_json(const SweepOptions& o) {
  return {{"grid_points", o.grid_points},
          {"relative_tolerance", o.relative_tolerance},
          {"window_override", o.window_override},
          {"window_rule", "|q| T_max N = 4 pi, one doubling if the minimum is in the final 5%"}};
}

/// Maximal squeezing of the two-axis Hamiltonian from |Jz = -j>.
inline SqueezingTrace two_axis_max_squeezing(const TwoAxisParams& p, const SweepOptions& opt = {}) {
  const SpinOperatorSet ops = build_spin_ops(p.atom_count);
  const Matrix h = build_two_axis(p, ops);
  const QuantumState psi0 = coherent_state_down(p.atom_count);
  SearchOptions search;
  search.grid_points = opt.grid_points;
  search.relative_tolerance = opt.relative_tolerance;
  search.t_max = opt.window_override > 0 ? opt.window_override : default_search_window(p.q, p.atom_count);
  const auto sectors = spin_parity_sectors(p.atom_count);
  return find_max_squeezing(h, psi0, ops, search, sectors);
}

struct SweepResult {
  std::string axis_name;
  std::vector<double> axis_values;
  std::vector<double> xi_m_squared;
  std::vector<double> t_m;
  std::vector<std::vector<std::string>> flags;
  nlohmann::json metadata;

  std::size_t argmin() const {
    return static_cast<std::size_t>(std::min_element(xi_m_squared.begin(), xi_m_squared.end()) - xi_m_squared.begin());
  }
  bool any_flagged() const {
    return std::any_of(flags.begin(), flags.end(), [](const auto& f) {
      return std::any_of(f.begin(), f.end(), [](const std::string& s) { return s != twoaxis::flags::kWindowExtended; });
    });
  }
};

struct ScalingFit {
  std::vector<int> n_values;
  std::vector<double> xi_m_squared;
  std::vector<double> t_m;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<std::string> warnings;
  nlohmann::json metadata;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = slope x + intercept.
inline LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) fail(ErrorCategory::invalid_argument, "least_squares: need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) fail(ErrorCategory::invalid_argument, "least_squares: abscissae are all equal");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

namespace detail {

inline void require_strictly_ascending(const std::vector<double>& v, const char* what) {
  if (v.empty()) fail(ErrorCategory::invalid_argument, std::string(what) + ": axis grid is empty");
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) fail(ErrorCategory::invalid_argument, std::string(what) + ": axis grid must be strictly ascending");
}

inline SweepResult run_two_axis_sweep(std::string axis_name, std::vector<double> axis,
                                      const std::function<TwoAxisParams(double)>& point, const SweepOptions& opt) {
  SweepResult r;
  r.axis_name = std::move(axis_name);
  r.axis_values = std::move(axis);
  const std::size_t n = r.axis_values.size();
  r.xi_m_squared.assign(n, 0.0);
  r.t_m.assign(n, 0.0);
  r.flags.assign(n, {});
  parallel_for(n, opt.threads, [&](std::size_t i) {
    const auto tr = two_axis_max_squeezing(point(r.axis_values[i]), opt);
    r.xi_m_squared[i] = tr.summary.xi_m_squared;
    r.t_m[i] = tr.summary.t_m;
    r.flags[i] = tr.flags;
  });
  r.metadata = {{"axis_name", r.axis_name},
                {"unit_convention", "energies in units of |q| (q = 1), times in units of 1/|q|"},
                {"initial_state", "|Jz=-j>"},
                {"search", to_json(opt)},
                {"version", kLibraryVersion}};
  return r;
}

}  // namespace detail

inline SweepResult sweep_chi(std::vector<double> chi_values, int atom_count, const SweepOptions& opt = {}) {
  detail::require_strictly_ascending(chi_values, "sweep_chi");
  auto r = detail::run_two_axis_sweep("chi", std::move(chi_values),
                                      [&](double chi) { return TwoAxisParams{1.0, chi, 0.0, atom_count}; }, opt);
  r.metadata["parameters"] = {{"q", 1.0}, {"omega_0", 0.0}, {"atom_count", atom_count}};
  r.metadata["argmin_chi"] = r.axis_values[r.argmin()];
  return r;
}

inline SweepResult sweep_omega0(std::vector<double> omega0_values, double chi, int atom_count,
                                const SweepOptions& opt = {}) {
  detail::require_strictly_ascending(omega0_values, "sweep_omega0");
  auto r = detail::run_two_axis_sweep("omega_0", std::move(omega0_values),
                                      [&](double w0) { return TwoAxisParams{1.0, chi, w0, atom_count}; }, opt);
  r.metadata["parameters"] = {{"q", 1.0}, {"chi", chi}, {"atom_count", atom_count}};
  r.metadata["argmin_omega_0"] = r.axis_values[r.argmin()];
  return r;
}

/// Default omega_0 grid: 41 points over [0, 0.2 |q| N].
inline std::vector<double> default_omega0_grid(int atom_count, int points = 41) {
  return uniform_grid(0.0, 0.2 * atom_count, points);
}

inline std::vector<int> default_scaling_grid() {
  std::vector<int> n;
  for (int v = 20; v <= 200; v += 10) n.push_back(v);
  return n;
}

inline constexpr std::size_t kRecommendedFitPoints = 10;

inline ScalingFit sweep_scaling(std::vector<int> n_values, double chi, double omega_0, const SweepOptions& opt = {}) {
  if (n_values.size() < 2) fail(ErrorCategory::invalid_argument, "sweep_scaling: need at least 2 atom numbers");
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    if (n_values[i] < 2) fail(ErrorCategory::invalid_argument, "sweep_scaling: atom numbers must be >= 2");
    if (i > 0 && n_values[i] <= n_values[i - 1])
      fail(ErrorCategory::invalid_argument, "sweep_scaling: atom numbers must be strictly ascending");
  }
  std::vector<double> axis(n_values.begin(), n_values.end());
  auto sweep = detail::run_two_axis_sweep(
      "N", axis, [&](double n) { return TwoAxisParams{1.0, chi, omega_0, static_cast<int>(n)}; }, opt);

  ScalingFit fit;
  fit.n_values = std::move(n_values);
  fit.xi_m_squared = sweep.xi_m_squared;
  fit.t_m = sweep.t_m;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < axis.size(); ++i) {
    lx.push_back(std::log(axis[i]));
    ly.push_back(std::log(fit.xi_m_squared[i]));
  }
  const auto line = least_squares(lx, ly);
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  fit.r_squared = line.r_squared;
  if (fit.n_values.size() < kRecommendedFitPoints)
    fit.warnings.push_back("low_point_count: " + std::to_string(fit.n_values.size()) + " atom numbers (recommended >= " +
                           std::to_string(kRecommendedFitPoints) + ")");
  if (sweep.any_flagged()) fit.warnings.emplace_back("flagged_points: one or more per-N results carry flags; fit is suspect");
  fit.metadata = sweep.metadata;
  fit.metadata["parameters"] = {{"q", 1.0}, {"chi", chi}, {"omega_0", omega_0}};
  fit.metadata["point_flags"] = sweep.flags;
  return fit;
}

// ---------------------------------------------------------------------------
// Full two-mode Dicke model vs effective two-axis model.

struct FullModelTrace {
  int cutoff_a = 0;
  int cutoff_b = 0;
  SqueezingTrace trace;
  std::vector<double> photons_a;
  std::vector<double> photons_b;
};

/// xi^2(t) and mean photon numbers of the two-mode Dicke model from
/// |Jz = -j> (x) vacuum (x) vacuum.
inline FullModelTrace full_model_trace(const TwoModeDickeParams& eff, int cutoff_a, int cutoff_b,
                                       std::span<const double> times) {
  const DickeHamiltonian h = build_two_mode_dicke(eff, cutoff_a, cutoff_b);
  const QuantumState psi0 = dicke_initial_state(eff.atom_count, cutoff_a, cutoff_b);
  const Propagator prop(h.matrix, psi0.amplitudes(), EvolutionMethod::automatic, h.parity_sector);
  const SpinOperatorSet ops = build_spin_ops(eff.atom_count);
  const SpinMomentEvaluator moments(ops);

  FullModelTrace out;
  out.cutoff_a = cutoff_a;
  out.cutoff_b = cutoff_b;
  out.trace = squeezing_trace(prop, h.basis, moments, times);
  const auto da = cutoff_a + 1, db = cutoff_b + 1;
  constexpr std::size_t kChunk = 512;
  for (std::size_t c0 = 0; c0 < times.size(); c0 += kChunk) {
    const std::size_t nc = std::min(kChunk, times.size() - c0);
    const Matrix states = prop.states_at(times.subspan(c0, nc));
    for (Eigen::Index c = 0; c < states.cols(); ++c) {
      double na = 0, nb = 0;
      for (Eigen::Index i = 0; i < states.rows(); ++i) {
        const double w = std::norm(states(i, c));
        na += w * static_cast<double>((i / db) % da);
        nb += w * static_cast<double>(i % db);
      }
      out.photons_a.push_back(na);
      out.photons_b.push_back(nb);
    }
  }
  return out;
}

inline SqueezingTrace two_axis_trace(const TwoAxisParams& p, std::span<const double> times) {
  const SpinOperatorSet ops = build_spin_ops(p.atom_count);
  const Matrix h = build_two_axis(p, ops);
  const QuantumState psi0 = coherent_state_down(p.atom_count);
  const auto sectors = spin_parity_sectors(p.atom_count);
  const Propagator prop(to_sparse(h), psi0.amplitudes(), EvolutionMethod::automatic, sectors);
  return squeezing_trace(prop, psi0.basis(), SpinMomentEvaluator(ops), times);
}

inline double sup_norm_difference(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) fail(ErrorCategory::dimension, "sup_norm_difference: length mismatch");
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

struct AuditOptions {
  int start_cutoff = 1;
  int max_doublings = 3;
  double tolerance = 1e-6;
  double dispersive_warn_threshold = 10.0;
};

inline nlohmann::json to_json(const AuditOptions& o) {
  return {{"start_cutoff", o.start_cutoff},
          {"max_doublings", o.max_doublings},
          {"tolerance", o.tolerance},
          {"dispersive_warn_threshold", o.dispersive_warn_threshold}};
}

namespace flags {
inline constexpr const char* kCutoffNotConverged = "cutoff_not_converged";
inline constexpr const char* kNotDispersive = "not_dispersive";
}  // namespace flags

struct CutoffReport {
  std::vector<int> cutoffs;        // cutoffs evaluated, in order
  std::vector<double> sup_change;  // sup-norm change between consecutive cutoffs
  bool converged = false;
  int converged_cutoff = 0;        // smallest cutoff that already matched its doubling
  FullModelTrace finest;           // trace at the largest cutoff evaluated
  double max_photons_a = 0.0;
  double max_photons_b = 0.0;
  std::vector<double> dispersive_photons_a;  // lambda_1^2 <Jx^2> / omega_A^2 from the effective model
  std::vector<double> dispersive_photons_b;  // lambda_2^2 <Jy^2> / omega_B^2
  DispersiveVerdict verdict;
  std::vector<std::string> flags;
};

/// Doubles both Fock cutoffs until the full-model xi^2 trace changes by less
/// than the tolerance (sup norm) on the given time grid.
inline CutoffReport convergence_audit(const TwoModeDickeParams& eff, std::span<const double> times,
                                      const AuditOptions& opt = {}) {
  if (opt.start_cutoff < 1) fail(ErrorCategory::invalid_argument, "convergence_audit: start cutoff must be >= 1");
  CutoffReport rep;
  rep.verdict = dispersive_verdict(eff, opt.dispersive_warn_threshold);
  if (!rep.verdict.dispersive) rep.flags.emplace_back(flags::kNotDispersive);

  int cutoff = opt.start_cutoff;
  FullModelTrace prev = full_model_trace(eff, cutoff, cutoff, times);
  rep.cutoffs.push_back(cutoff);
  for (int d = 0; d < opt.max_doublings; ++d) {
    cutoff *= 2;
    FullModelTrace next = full_model_trace(eff, cutoff, cutoff, times);
    rep.cutoffs.push_back(cutoff);
    const double change = sup_norm_difference(prev.trace.xi_squared, next.trace.xi_squared);
    rep.sup_change.push_back(change);
    prev = std::move(next);
    if (change < opt.tolerance) {
      rep.converged = true;
      rep.converged_cutoff = cutoff / 2;
      break;
    }
  }
  if (!rep.converged) rep.flags.emplace_back(flags::kCutoffNotConverged);
  rep.finest = std::move(prev);
  for (double v : rep.finest.photons_a) rep.max_photons_a = std::max(rep.max_photons_a, v);
  for (double v : rep.finest.photons_b) rep.max_photons_b = std::max(rep.max_photons_b, v);

  // Adiabatic-following estimate a = -lambda_1 Jx / omega_A evaluated on the
  // effective dynamics.
  if (eff.omega_a_eff != 0.0 && eff.omega_b_eff != 0.0 && !(eff.lambda_1 == 0.0 && eff.lambda_2 != 0.0)) {
    const auto mapped = map_to_two_axis(eff).params;
    const SpinOperatorSet ops = build_spin_ops(eff.atom_count);
    const Matrix h = build_two_axis(mapped, ops);
    const Propagator prop(to_sparse(h), coherent_state_down(eff.atom_count).amplitudes(), EvolutionMethod::automatic,
                          spin_parity_sectors(eff.atom_count));
    const SpinMomentEvaluator moments(ops);
    const BasisSpec basis{eff.atom_count + 1, {}};
    const Matrix states = prop.states_at(times);
    for (Eigen::Index c = 0; c < states.cols(); ++c) {
      const auto m = moments(states.col(c), basis);
      rep.dispersive_photons_a.push_back(eff.lambda_1 * eff.lambda_1 * m.second(0, 0) /
                                         (eff.omega_a_eff * eff.omega_a_eff));
      rep.dispersive_photons_b.push_back(eff.lambda_2 * eff.lambda_2 * m.second(1, 1) /
                                         (eff.omega_b_eff * eff.omega_b_eff));
    }
  }
  return rep;
}

struct CompareOptions {
  double t_max = 0.0;           // 0: window_factor x first local minimum of the effective trace
  double window_factor = 1.5;
  int grid_points = 2001;
  AuditOptions audit;
};

struct ComparisonResult {
  TwoAxisParams mapped;
  DispersiveVerdict verdict;
  double t_max = 0.0;
  double first_minimum_time = 0.0;
  SqueezingTrace effective;
  SqueezingTrace full;
  double max_abs_deviation = 0.0;
  CutoffReport audit;
  std::vector<std::string> flags;
  nlohmann::json metadata;
};

/// Earliest strict local minimum of xi^2 below 1 on a grid; npos if none.
inline std::size_t first_local_minimum(const std::vector<double>& x, double below = 1.0 - 1e-9) {
  for (std::size_t k = 1; k + 1 < x.size(); ++k)
    if (x[k] < x[k - 1] && x[k] <= x[k + 1] && x[k] < below) return k;
  return static_cast<std::size_t>(-1);
}

inline ComparisonResult compare_full_vs_effective(const TwoModeDickeParams& eff, const CompareOptions& opt = {}) {
  ComparisonResult r;
  const auto mapped = map_to_two_axis(eff, opt.audit.dispersive_warn_threshold);
  r.mapped = mapped.params;
  r.verdict = mapped.verdict;

  double t_max = opt.t_max;
  if (t_max <= 0.0) {
    // Locate the first squeezing minimum of the effective model.
    double probe = r.mapped.q != 0.0 ? default_search_window(r.mapped.q, eff.atom_count) : 1.0;
    std::size_t k = static_cast<std::size_t>(-1);
    std::vector<double> grid;
    for (int attempt = 0; attempt < 2 && k == static_cast<std::size_t>(-1); ++attempt, probe *= 2) {
      grid = uniform_grid(0.0, probe, opt.grid_points);
      k = first_local_minimum(two_axis_trace(r.mapped, grid).xi_squared);
    }
    if (k == static_cast<std::size_t>(-1)) {
      r.flags.emplace_back(flags::kNoSqueezing);
      t_max = probe / 2;
    } else {
      r.first_minimum_time = grid[k];
      t_max = opt.window_factor * grid[k];
    }
  }
  r.t_max = t_max;
  const auto times = uniform_grid(0.0, t_max, opt.grid_points);
  r.effective = two_axis_trace(r.mapped, times);
  r.audit = convergence_audit(eff, times, opt.audit);
  r.full = r.audit.finest.trace;
  r.max_abs_deviation = sup_norm_difference(r.full.xi_squared, r.effective.xi_squared);
  for (const auto& f : r.audit.flags) r.flags.push_back(f);
  r.metadata = {{"window_rule", opt.t_max > 0 ? "explicit" : "window_factor x first local minimum of effective trace"},
                {"window_factor", opt.window_factor},
                {"grid_points", opt.grid_points},
                {"audit", to_json(opt.audit)},
                {"initial_state", "|Jz=-j> (x) |0>_a (x) |0>_b (full); |Jz=-j> (effective)"},
                {"assumptions", {"both cavities start in vacuum"}},
                {"version", kLibraryVersion}};
  return r;
}

}  // namespace twoaxis
