#pragma once

// `twoaxis` command-line front end. cli_main is a library function so tests
// can drive it in-process.

#include "twoaxis/cli_io.hpp"
#include "twoaxis/error.hpp"
#include "twoaxis/experiments.hpp"
#include "twoaxis/model_builder.hpp"
#include "twoaxis/propagator.hpp"
#include "twoaxis/squeezing_metrics.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace twoaxis {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitValidation = 3,
  kExitFlagged = 4,
  kExitIo = 5,
  kExitNumerical = 6,
};

inline int exit_code_for(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::invalid_argument:
    case ErrorCategory::config: return kExitUsage;
    case ErrorCategory::validation:
    case ErrorCategory::dimension: return kExitValidation;
    case ErrorCategory::flagged: return kExitFlagged;
    case ErrorCategory::io: return kExitIo;
    case ErrorCategory::numerical:
    case ErrorCategory::degenerate_frame: return kExitNumerical;
  }
  return kExitInternal;
}

inline void emit_error(std::ostream& err, std::string_view category, const std::string& message, int code) {
  json e = {{"error", {{"category", category}, {"message", message}, {"exit_code", code}}}};
  err << e.dump() << '\n';
}

namespace cli_detail {

/// Values supplied on the command line; unset means "not given".
struct FlagValues {
  std::optional<std::string> config, out, units, method;
  bool strict = false;
  std::optional<int> n;
  std::optional<double> q, chi, omega_0, omega_a, omega_b, lambda_1, lambda_2;
  std::optional<double> t_max;
  std::optional<int> points, cutoff_a, cutoff_b, start_cutoff, max_doublings;
  std::optional<double> relative_tolerance, audit_tolerance, dispersive_ratio;
  std::optional<std::string> n_grid, chi_grid, omega0_grid;
  std::optional<unsigned> threads;
  // estimate-physical
  std::optional<double> g_s1, rabi_s1, delta_s1, gamma, kappa;
};

struct Context {
  std::string command;
  RunConfig cfg;
  FlagValues flags;
  std::filesystem::path out_dir;
  bool strict = false;
  json summary;
  std::vector<std::string> outputs;
  std::vector<std::string> result_flags;
  std::ostream* err = &std::cerr;

  void add_flags(const std::vector<std::string>& fs) {
    for (const auto& f : fs)
      if (std::find(result_flags.begin(), result_flags.end(), f) == result_flags.end()) result_flags.push_back(f);
  }
  std::filesystem::path file(const std::string& name) {
    outputs.push_back(name);
    return out_dir / name;
  }
};

template <class T>
void override(std::optional<T>& dst, const std::optional<T>& src) {
  if (src) dst = src;
}

/// Merges config and flags (flags win) and fixes the parameter level.
inline void merge(Context& ctx) {
  auto& c = ctx.cfg;
  const auto& f = ctx.flags;
  if (f.units) c.units = parse_units(*f.units);
  override(c.n_grid, f.n_grid);
  override(c.chi_grid, f.chi_grid);
  override(c.omega0_grid, f.omega0_grid);
  override(c.t_max, f.t_max);
  override(c.points, f.points);
  override(c.cutoff_a, f.cutoff_a);
  override(c.cutoff_b, f.cutoff_b);
  override(c.method, f.method);
  override(c.relative_tolerance, f.relative_tolerance);
  override(c.audit_tolerance, f.audit_tolerance);
  override(c.dispersive_ratio, f.dispersive_ratio);
  override(c.start_cutoff, f.start_cutoff);
  override(c.max_doublings, f.max_doublings);
  override(c.output_dir, f.out);
  override(c.threads, f.threads);
  ctx.strict = f.strict || c.strict.value_or(false);

  const bool dicke_flags = f.omega_a || f.omega_b || f.lambda_1 || f.lambda_2;
  const bool axis_flags = f.q.has_value() || f.chi.has_value();
  if (dicke_flags && axis_flags)
    fail(ErrorCategory::config, "--q/--chi and --omega-a/--omega-b/--lambda-1/--lambda-2 select different parameter "
                                "levels; give only one");
  if (dicke_flags) {
    if (c.level == ParamLevel::none) {
      c.level = ParamLevel::dicke;
      c.dicke = {};
    } else if (c.level != ParamLevel::dicke) {
      fail(ErrorCategory::config, std::string("dicke-level flags conflict with the config's '") + level_name(c.level) +
                                      "' block");
    }
    if (f.omega_a) c.dicke.omega_a_eff = *f.omega_a;
    if (f.omega_b) c.dicke.omega_b_eff = *f.omega_b;
    if (f.lambda_1) c.dicke.lambda_1 = *f.lambda_1;
    if (f.lambda_2) c.dicke.lambda_2 = *f.lambda_2;
  }
  if (axis_flags) {
    if (c.level == ParamLevel::none) {
      c.level = ParamLevel::two_axis;
      c.two_axis = TwoAxisParams{1.0, 0.0, 0.0, 0};
    } else if (c.level != ParamLevel::two_axis) {
      fail(ErrorCategory::config, std::string("--q/--chi conflict with the config's '") + level_name(c.level) + "' block");
    }
    if (f.q) c.two_axis.q = *f.q;
    if (f.chi) c.two_axis.chi = *f.chi;
  }
  if (f.omega_0) {
    if (c.level == ParamLevel::raw) fail(ErrorCategory::config, "--omega-0 cannot override a raw parameter block");
    if (c.level == ParamLevel::none) {
      c.level = ParamLevel::two_axis;
      c.two_axis = TwoAxisParams{1.0, 0.0, 0.0, 0};
    }
    (c.level == ParamLevel::dicke ? c.dicke.omega_0 : c.two_axis.omega_0) = *f.omega_0;
  }
  if (f.n) {
    switch (c.level) {
      case ParamLevel::raw: c.raw.atom_count = *f.n; break;
      case ParamLevel::dicke: c.dicke.atom_count = *f.n; break;
      case ParamLevel::two_axis: c.two_axis.atom_count = *f.n; break;
      case ParamLevel::none: break;
    }
  }
}

/// The raw -> effective -> two-axis chain in internal angular units.
struct Model {
  ParamLevel level = ParamLevel::none;
  std::optional<TwoModeDickeParams> dicke;
  std::optional<TwoAxisParams> two_axis;
  std::optional<DispersiveVerdict> verdict;
  json chain = json::object();
};

inline int require_atoms(int n, const char* where) {
  if (n < 1) fail(ErrorCategory::config, std::string(where) + ".atom_count: must be >= 1 (use --n)");
  return n;
}

inline Model resolve_model(Context& ctx) {
  auto& c = ctx.cfg;
  Model m;
  m.level = c.level;
  const bool phys = c.units == UnitSystem::physical;
  m.chain["units"] = unit_name(c.units);
  m.chain["level"] = level_name(c.level);
  if (phys) m.chain["conversion"] = "input nu[MHz] -> omega = 2 pi nu [rad/us]; times in us";
  const double ratio = c.dispersive_ratio.value_or(10.0);
  switch (c.level) {
    case ParamLevel::none:
      fail(ErrorCategory::config, "no model parameters: supply a config block (raw, dicke or two_axis) or flags");
    case ParamLevel::raw: {
      require_atoms(c.raw.atom_count, "raw");
      m.chain["input"] = to_json(c.raw);
      const auto raw = phys ? to_angular(c.raw) : c.raw;
      const auto d = derive_effective_params(raw);
      m.chain["raw_internal"] = to_json(raw);
      m.chain["drive_validation"] = to_json(d.validation);
      m.dicke = d.params;
      break;
    }
    case ParamLevel::dicke:
      require_atoms(c.dicke.atom_count, "dicke");
      m.chain["input"] = to_json(c.dicke);
      m.dicke = phys ? to_angular(c.dicke) : c.dicke;
      break;
    case ParamLevel::two_axis:
      require_atoms(c.two_axis.atom_count, "two_axis");
      m.chain["input"] = to_json(c.two_axis);
      m.two_axis = phys ? to_angular(c.two_axis) : c.two_axis;
      break;
  }
  if (m.dicke) {
    m.chain["dicke"] = to_json(*m.dicke);
    const auto mapped = map_to_two_axis(*m.dicke, ratio);
    m.two_axis = mapped.params;
    m.verdict = mapped.verdict;
    m.chain["dispersive_verdict"] = to_json(mapped.verdict);
    if (!mapped.verdict.dispersive) ctx.add_flags({flags::kNotDispersive});
  }
  m.chain["two_axis"] = to_json(*m.two_axis);
  return m;
}

inline EvolutionMethod parse_method(const std::optional<std::string>& s) {
  if (!s || *s == "automatic") return EvolutionMethod::automatic;
  if (*s == "spectral") return EvolutionMethod::spectral;
  if (*s == "krylov") return EvolutionMethod::krylov;
  fail(ErrorCategory::config, "method: expected automatic, spectral or krylov, got '" + *s + "'");
}

inline SweepOptions sweep_options(const Context& ctx) {
  SweepOptions o;
  o.grid_points = ctx.cfg.points.value_or(2001);
  o.relative_tolerance = ctx.cfg.relative_tolerance.value_or(1e-6);
  o.window_override = ctx.cfg.t_max.value_or(0.0);
  o.threads = ctx.cfg.threads.value_or(0);
  if (o.grid_points < 3) fail(ErrorCategory::config, "points: need at least 3 grid points");
  if (!(o.relative_tolerance > 0 && o.relative_tolerance < 1))
    fail(ErrorCategory::config, "relative_tolerance: must lie in (0, 1)");
  if (o.window_override < 0) fail(ErrorCategory::config, "t_max: must be positive");
  return o;
}

inline AuditOptions audit_options(const Context& ctx) {
  AuditOptions a;
  a.start_cutoff = ctx.cfg.start_cutoff.value_or(1);
  a.max_doublings = ctx.cfg.max_doublings.value_or(3);
  a.tolerance = ctx.cfg.audit_tolerance.value_or(1e-6);
  a.dispersive_warn_threshold = ctx.cfg.dispersive_ratio.value_or(10.0);
  if (a.start_cutoff < 1) fail(ErrorCategory::config, "start_cutoff: must be >= 1");
  if (a.max_doublings < 1) fail(ErrorCategory::config, "max_doublings: must be >= 1");
  return a;
}

/// Sweeps run in units of |q|; a two_axis block may only fix the other parameters.
inline TwoAxisParams sweep_base(const Context& ctx) {
  const auto& c = ctx.cfg;
  if (c.level == ParamLevel::raw || c.level == ParamLevel::dicke)
    fail(ErrorCategory::config, std::string(level_name(c.level)) + ": sweeps take two_axis parameters (units of |q|)");
  TwoAxisParams p{1.0, -1.0, 0.0, 100};
  if (c.level == ParamLevel::two_axis) {
    if (c.two_axis.q != 1.0) fail(ErrorCategory::config, "two_axis.q: sweeps run with q = 1 (energies in units of |q|)");
    if (c.units == UnitSystem::physical) fail(ErrorCategory::config, "units: sweeps are dimensionless (units of |q|)");
    p = c.two_axis;
    if (p.atom_count < 1) p.atom_count = 100;
  }
  return p;
}

inline json trace_json(const SqueezingTrace& t) {
  return {{"xi_m_squared", t.summary.xi_m_squared},
          {"t_m", t.summary.t_m},
          {"t_max", t.t_max},
          {"grid_points", t.times.size()},
          {"flags", t.flags}};
}

// ---------------------------------------------------------------------------
// Subcommands

inline void cmd_derive_params(Context& ctx) {
  const Model m = resolve_model(ctx);
  if (m.level == ParamLevel::two_axis)
    fail(ErrorCategory::config, "derive-params needs a raw or dicke parameter block");
  ctx.summary["model"] = m.chain;
  if (m.dicke) {
    try {
      build_two_mode_dicke(*m.dicke, 1, 1);
      ctx.summary["dicke_form_valid"] = true;
    } catch (const Error& e) {
      if (e.category() != ErrorCategory::validation) throw;
      ctx.summary["dicke_form_valid"] = false;
      ctx.summary["dicke_form_error"] = e.what();
      ctx.add_flags({"eta_nonzero"});
    }
  }
  if (m.chain.contains("drive_validation")) {
    const auto& v = m.chain["drive_validation"];
    if (!v["large_detuning"].get<bool>()) ctx.add_flags({"small_detuning"});
    if (!v["matched_conditions"].get<bool>()) ctx.add_flags({"unmatched_conditions"});
  }
}

inline void cmd_evolve(Context& ctx, bool search) {
  const Model m = resolve_model(ctx);
  ctx.summary["model"] = m.chain;
  const auto method = parse_method(ctx.cfg.method);
  const int points = ctx.cfg.points.value_or(search ? 2001 : 201);
  if (points < 3) fail(ErrorCategory::config, "points: need at least 3 grid points");
  const auto& ax = *m.two_axis;
  const double t_max = ctx.cfg.t_max.value_or(default_search_window(ax.q, ax.atom_count));
  if (!(t_max > 0)) fail(ErrorCategory::config, "t_max: must be positive");
  const int ca = ctx.cfg.cutoff_a.value_or(8), cb = ctx.cfg.cutoff_b.value_or(8);

  // The full model when dicke parameters exist, otherwise the two-axis model.
  SparseMatrix h;
  std::vector<int> sectors;
  std::optional<QuantumState> psi0;
  if (m.dicke) {
    auto dh = build_two_mode_dicke(*m.dicke, ca, cb);
    h = std::move(dh.matrix);
    sectors = std::move(dh.parity_sector);
    psi0.emplace(dicke_initial_state(m.dicke->atom_count, ca, cb));
    ctx.summary["model_evolved"] = "two_mode_dicke";
    ctx.summary["cutoffs"] = {ca, cb};
  } else {
    h = to_sparse(build_two_axis(ax));
    sectors = spin_parity_sectors(ax.atom_count);
    psi0.emplace(coherent_state_down(ax.atom_count));
    ctx.summary["model_evolved"] = "two_axis";
  }
  const auto ops = build_spin_ops(ax.atom_count);
  const SpinMomentEvaluator moments(ops);

  if (search) {
    SearchOptions so;
    so.t_max = t_max;
    so.grid_points = points;
    so.relative_tolerance = ctx.cfg.relative_tolerance.value_or(1e-6);
    const Propagator prop(h, psi0->amplitudes(), method, sectors);
    const auto tr = find_max_squeezing(prop, psi0->basis(), ops, so);
    ctx.summary["method"] = method_name(prop.method());
    ctx.summary["search"] = {{"t_max_requested", t_max}, {"relative_tolerance", so.relative_tolerance}};
    ctx.summary["result"] = trace_json(tr);
    ctx.add_flags(tr.flags);
    write_trace_csv(tr, ctx.file("squeeze_trace.csv"));
    return;
  }

  const EvolutionPlan plan(h, uniform_grid(0.0, t_max, points), method, 1e-10, sectors);
  const auto states = evolve(plan, *psi0);
  SqueezingTrace tr;
  tr.times = plan.times();
  tr.t_max = t_max;
  const Vector e0v = plan.hamiltonian() * psi0->amplitudes();
  const double e0 = std::real(psi0->amplitudes().dot(e0v));
  double norm_drift = 0, energy_drift = 0;
  for (const auto& s : states) {
    const auto smp = squeezing_sample(moments(s));
    tr.xi_squared.push_back(smp.xi_squared);
    tr.optimal_angle.push_back(smp.angle);
    tr.frame.push_back(smp.frame);
    tr.degenerate.push_back(smp.degenerate);
    norm_drift = std::max(norm_drift, std::abs(s.amplitudes().norm() - 1.0));
    const Vector hv = plan.hamiltonian() * s.amplitudes();
    energy_drift = std::max(energy_drift, std::abs(std::real(s.amplitudes().dot(hv)) - e0));
  }
  if (std::find(tr.degenerate.begin(), tr.degenerate.end(), true) != tr.degenerate.end())
    tr.flags.emplace_back(flags::kDegenerateSamples);
  const auto it = std::min_element(tr.xi_squared.begin(), tr.xi_squared.end());
  tr.summary = {*it, tr.times[static_cast<std::size_t>(it - tr.xi_squared.begin())]};
  ctx.summary["method"] = method_name(plan.method());
  ctx.summary["result"] = trace_json(tr);
  ctx.summary["result"]["grid_minimum_only"] = true;
  ctx.summary["conservation"] = {{"max_norm_drift", norm_drift}, {"max_energy_drift", energy_drift}};
  ctx.add_flags(tr.flags);
  write_trace_csv(tr, ctx.file("evolve_trace.csv"));
}

inline void cmd_compare(Context& ctx) {
  const Model m = resolve_model(ctx);
  if (!m.dicke) fail(ErrorCategory::config, "compare needs a raw or dicke parameter block");
  ctx.summary["model"] = m.chain;
  CompareOptions opt;
  opt.t_max = ctx.cfg.t_max.value_or(0.0);
  opt.grid_points = ctx.cfg.points.value_or(2001);
  opt.audit = audit_options(ctx);
  if (opt.grid_points < 3) fail(ErrorCategory::config, "points: need at least 3 grid points");
  const auto r = compare_full_vs_effective(*m.dicke, opt);
  ctx.summary["options"] = r.metadata;
  ctx.summary["result"] = {
      {"t_max", r.t_max},
      {"first_minimum_time", r.first_minimum_time},
      {"max_abs_deviation", r.max_abs_deviation},
      {"effective", trace_json(r.effective)},
      {"full", trace_json(r.full)},
      {"audit",
       {{"cutoffs", r.audit.cutoffs},
        {"sup_change", r.audit.sup_change},
        {"converged", r.audit.converged},
        {"converged_cutoff", r.audit.converged_cutoff},
        {"max_photons_a", r.audit.max_photons_a},
        {"max_photons_b", r.audit.max_photons_b}}}};
  ctx.add_flags(r.flags);
  write_trace_csv(r.full, ctx.file("compare_full.csv"));
  write_trace_csv(r.effective, ctx.file("compare_effective.csv"));
}

inline void cmd_audit(Context& ctx) {
  const Model m = resolve_model(ctx);
  if (!m.dicke) fail(ErrorCategory::config, "audit-cutoff needs a raw or dicke parameter block");
  ctx.summary["model"] = m.chain;
  const auto opt = audit_options(ctx);
  const int points = ctx.cfg.points.value_or(401);
  if (points < 3) fail(ErrorCategory::config, "points: need at least 3 grid points");
  const double t_max = ctx.cfg.t_max.value_or(default_search_window(m.two_axis->q, m.two_axis->atom_count));
  const auto times = uniform_grid(0.0, t_max, points);
  const auto rep = convergence_audit(*m.dicke, times, opt);
  double max_est_a = 0, max_est_b = 0;
  for (double v : rep.dispersive_photons_a) max_est_a = std::max(max_est_a, v);
  for (double v : rep.dispersive_photons_b) max_est_b = std::max(max_est_b, v);
  ctx.summary["options"] = to_json(opt);
  ctx.summary["window"] = {{"t_max", t_max}, {"grid_points", points}};
  ctx.summary["result"] = {{"cutoffs", rep.cutoffs},
                           {"sup_change", rep.sup_change},
                           {"converged", rep.converged},
                           {"converged_cutoff", rep.converged_cutoff},
                           {"max_photons_a", rep.max_photons_a},
                           {"max_photons_b", rep.max_photons_b},
                           {"dispersive_estimate_max_photons_a", max_est_a},
                           {"dispersive_estimate_max_photons_b", max_est_b},
                           {"verdict", to_json(rep.verdict)}};
  ctx.add_flags(rep.flags);
  write_trace_csv(rep.finest.trace, ctx.file("audit_trace.csv"));
}

inline void finish_sweep(Context& ctx, const SweepResult& r, const std::string& stem) {
  ctx.summary["result"] = r.metadata;
  ctx.summary["result"]["point_flags"] = r.flags;
  for (const auto& f : r.flags) ctx.add_flags(f);
  write_sweep_csv(r, ctx.file(stem + ".csv"));
}

inline void cmd_sweep_n(Context& ctx) {
  const auto base = sweep_base(ctx);
  const auto grid = parse_int_grid(ctx.cfg.n_grid.value_or("20:200:10"), "n_grid");
  const auto fit = sweep_scaling(grid, base.chi, base.omega_0, sweep_options(ctx));
  ctx.summary["result"] = fit.metadata;
  ctx.summary["fit"] = {{"slope", fit.slope},
                        {"intercept", fit.intercept},
                        {"r_squared", fit.r_squared},
                        {"warnings", fit.warnings},
                        {"model", "log xi_m^2 = slope log N + intercept"}};
  for (const auto& f : fit.metadata["point_flags"]) ctx.add_flags(f.get<std::vector<std::string>>());
  SweepResult r;
  r.axis_name = "N";
  r.axis_values.assign(fit.n_values.begin(), fit.n_values.end());
  r.xi_m_squared = fit.xi_m_squared;
  r.t_m = fit.t_m;
  write_sweep_csv(r, ctx.file("sweep_n.csv"));
  for (const auto& w : fit.warnings) *ctx.err << "warning: " << w << '\n';
}

inline void cmd_sweep_chi(Context& ctx) {
  const auto base = sweep_base(ctx);
  const auto grid = parse_real_grid(ctx.cfg.chi_grid.value_or("-1:0:21"), "chi_grid");
  auto r = sweep_chi(grid, base.atom_count, sweep_options(ctx));
  if (base.omega_0 != 0.0) {
    r = detail::run_two_axis_sweep(
        "chi", grid, [&](double chi) { return TwoAxisParams{1.0, chi, base.omega_0, base.atom_count}; },
        sweep_options(ctx));
    r.metadata["argmin_chi"] = r.axis_values[r.argmin()];
  }
  r.metadata["parameters"] = {{"q", 1.0}, {"omega_0", base.omega_0}, {"atom_count", base.atom_count}};
  finish_sweep(ctx, r, "sweep_chi");
}

inline void cmd_sweep_omega0(Context& ctx) {
  const auto base = sweep_base(ctx);
  const auto grid = ctx.cfg.omega0_grid ? parse_real_grid(*ctx.cfg.omega0_grid, "omega0_grid")
                                        : default_omega0_grid(base.atom_count);
  const auto r = sweep_omega0(grid, base.chi, base.atom_count, sweep_options(ctx));
  finish_sweep(ctx, r, "sweep_omega0");
}

inline void cmd_estimate(Context& ctx) {
  PhysicalInputs in = parse_physical_inputs(ctx.cfg.estimate);
  const auto& f = ctx.flags;
  if (f.g_s1) in.g_s1 = *f.g_s1;
  if (f.rabi_s1) in.rabi_s1 = *f.rabi_s1;
  if (f.delta_s1) in.delta_s1 = *f.delta_s1;
  if (f.omega_a) in.omega_a = *f.omega_a;
  if (f.gamma) in.gamma = *f.gamma;
  if (f.kappa) in.kappa = *f.kappa;
  if (f.n) in.atom_count = *f.n;
  if (f.chi) in.chi = *f.chi;
  if (f.omega_0) in.omega_0 = *f.omega_0;
  const auto e = estimate_physical(in, sweep_options(ctx));
  ctx.summary["result"] = to_json(e);
  ctx.add_flags(e.flags);
  if (!e.shorter_than_lifetimes) ctx.add_flags({"t_m_exceeds_lifetime"});
}

}  // namespace cli_detail

/// Entry point of the `twoaxis` executable. Returns the process exit code.
inline int cli_main(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace cli_detail;
  Context ctx;
  ctx.err = &err;
  auto& f = ctx.flags;

  CLI::App app{"Two-axis spin squeezing in two cavities: models, evolution, squeezing and sweeps", "twoaxis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kLibraryVersion);
  app.option_defaults()->always_capture_default(false);

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "JSON config file");
    sub->add_option("--out", f.out, "output directory (default: $TWOAXIS_OUTPUT_DIR or .)");
    sub->add_flag("--strict", f.strict, "treat flagged results as failures (exit 4)");
    sub->add_option("--units", f.units, "dimensionless | physical (frequencies as nu in MHz)");
    sub->add_option("--threads", f.threads, "worker threads for sweeps (0 = all cores)");
  };
  auto model_flags = [&](CLI::App* sub) {
    sub->add_option("--n", f.n, "atom number N");
    sub->add_option("--q", f.q, "two-axis strength q");
    sub->add_option("--chi", f.chi, "two-axis anisotropy chi");
    sub->add_option("--omega-0", f.omega_0, "Jz coefficient omega_0");
    sub->add_option("--omega-a", f.omega_a, "effective frequency of mode a");
    sub->add_option("--omega-b", f.omega_b, "effective frequency of mode b");
    sub->add_option("--lambda-1", f.lambda_1, "coupling of Jx to mode a");
    sub->add_option("--lambda-2", f.lambda_2, "coupling of Jy to mode b");
  };
  auto time_flags = [&](CLI::App* sub) {
    sub->add_option("--t-max", f.t_max, "end of the time window");
    sub->add_option("--points", f.points, "time grid points");
  };
  auto audit_flags = [&](CLI::App* sub) {
    sub->add_option("--start-cutoff", f.start_cutoff, "first Fock cutoff of the audit");
    sub->add_option("--max-doublings", f.max_doublings, "cutoff doublings before flagging");
    sub->add_option("--audit-tolerance", f.audit_tolerance, "sup-norm convergence tolerance");
    sub->add_option("--dispersive-ratio", f.dispersive_ratio, "warn when min|omega|/max(lambda) is below this");
  };

  auto* derive = app.add_subcommand("derive-params", "raw drive parameters -> two-mode Dicke -> two-axis");
  common(derive);
  derive->add_option("--n", f.n, "atom number N");
  derive->add_option("--dispersive-ratio", f.dispersive_ratio, "dispersive warning threshold");

  auto* evolve_cmd = app.add_subcommand("evolve", "evolve |Jz=-j> and write the squeezing trace");
  auto* squeeze = app.add_subcommand("squeeze", "find the maximal squeezing xi_M^2 and t_m");
  for (auto* sub : {evolve_cmd, squeeze}) {
    common(sub);
    model_flags(sub);
    time_flags(sub);
    sub->add_option("--method", f.method, "automatic | spectral | krylov");
    sub->add_option("--cutoff-a", f.cutoff_a, "Fock cutoff of mode a (full model)");
    sub->add_option("--cutoff-b", f.cutoff_b, "Fock cutoff of mode b (full model)");
    sub->add_option("--relative-tolerance", f.relative_tolerance, "time refinement tolerance");
  }

  auto* compare = app.add_subcommand("compare", "full two-mode Dicke vs effective two-axis traces");
  auto* audit = app.add_subcommand("audit-cutoff", "Fock-cutoff convergence audit of the full model");
  for (auto* sub : {compare, audit}) {
    common(sub);
    model_flags(sub);
    time_flags(sub);
    audit_flags(sub);
  }

  auto* sweep_n = app.add_subcommand("sweep-n", "xi_M^2 vs N with a log-log fit");
  auto* sweep_chi_cmd = app.add_subcommand("sweep-chi", "xi_M^2 vs chi");
  auto* sweep_w0 = app.add_subcommand("sweep-omega0", "xi_M^2 vs omega_0");
  for (auto* sub : {sweep_n, sweep_chi_cmd, sweep_w0}) {
    common(sub);
    sub->add_option("--chi", f.chi, "anisotropy chi");
    sub->add_option("--omega-0", f.omega_0, "omega_0 in units of |q|");
    sub->add_option("--t-max", f.t_max, "search window (default |q| T N = 4 pi)");
    sub->add_option("--points", f.points, "coarse search grid points");
    sub->add_option("--relative-tolerance", f.relative_tolerance, "time refinement tolerance");
  }
  sweep_n->add_option("--n", f.n_grid, "N grid: start:stop:step or a comma list");
  sweep_chi_cmd->add_option("--n", f.n, "atom number N");
  sweep_chi_cmd->add_option("--chi-grid", f.chi_grid, "chi grid: start:stop:count or a comma list");
  sweep_w0->add_option("--n", f.n, "atom number N");
  sweep_w0->add_option("--omega0-grid", f.omega0_grid, "omega_0 grid: start:stop:count or a comma list");

  auto* estimate = app.add_subcommand("estimate-physical", "lambda_1, q and t_m in physical units");
  common(estimate);
  estimate->add_option("--g-s1", f.g_s1, "g_s1 / 2pi [MHz]");
  estimate->add_option("--rabi-s1", f.rabi_s1, "Omega_s1 / 2pi [MHz]");
  estimate->add_option("--delta-s1", f.delta_s1, "Delta_s1 / 2pi [MHz]");
  estimate->add_option("--omega-a", f.omega_a, "omega_A / 2pi [MHz]");
  estimate->add_option("--gamma", f.gamma, "atomic decay gamma / 2pi [MHz]");
  estimate->add_option("--kappa", f.kappa, "cavity decay kappa / 2pi [MHz]");
  estimate->add_option("--n", f.n, "atom number N");
  estimate->add_option("--chi", f.chi, "anisotropy chi");
  estimate->add_option("--omega-0", f.omega_0, "omega_0 in units of |q|");
  estimate->add_option("--points", f.points, "coarse search grid points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    emit_error(err, "usage", e.what(), kExitUsage);
    return kExitUsage;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    ctx.command = sub->get_name();
    if (f.config) ctx.cfg = load_config(*f.config);
    merge(ctx);
    ctx.out_dir = resolve_output_dir(ctx.cfg.output_dir);

    if (ctx.command == "derive-params") cmd_derive_params(ctx);
    else if (ctx.command == "evolve") cmd_evolve(ctx, false);
    else if (ctx.command == "squeeze") cmd_evolve(ctx, true);
    else if (ctx.command == "compare") cmd_compare(ctx);
    else if (ctx.command == "audit-cutoff") cmd_audit(ctx);
    else if (ctx.command == "sweep-n") cmd_sweep_n(ctx);
    else if (ctx.command == "sweep-chi") cmd_sweep_chi(ctx);
    else if (ctx.command == "sweep-omega0") cmd_sweep_omega0(ctx);
    else if (ctx.command == "estimate-physical") cmd_estimate(ctx);

    std::string stem = ctx.command;
    std::replace(stem.begin(), stem.end(), '-', '_');
    const std::string summary_name = stem + "_summary.json";
    ctx.outputs.push_back(summary_name);
    ctx.summary["command"] = ctx.command;
    ctx.summary["version"] = kLibraryVersion;
    ctx.summary["units"] = unit_name(ctx.cfg.units);
    ctx.summary["strict"] = ctx.strict;
    ctx.summary["flags"] = ctx.result_flags;
    ctx.summary["outputs"] = ctx.outputs;
    ctx.summary["invocation"] = std::vector<std::string>(argv + 1, argv + argc);
    write_json(ctx.summary, ctx.out_dir / summary_name);
    out << ctx.summary.dump(2) << '\n';

    std::vector<std::string> serious;
    for (const auto& fl : ctx.result_flags)
      if (fl != flags::kWindowExtended) serious.push_back(fl);
    if (!serious.empty()) {
      std::string joined;
      for (const auto& s : serious) joined += (joined.empty() ? "" : ", ") + s;
      if (ctx.strict) {
        emit_error(err, category_name(ErrorCategory::flagged), "flagged result: " + joined, kExitFlagged);
        return kExitFlagged;
      }
      err << "warning: flagged result: " << joined << '\n';
    }
    return kExitOk;
  } catch (const Error& e) {
    const int code = exit_code_for(e.category());
    emit_error(err, category_name(e.category()), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    emit_error(err, "internal", e.what(), kExitInternal);
    return kExitInternal;
  }
}

}  // namespace twoaxis
