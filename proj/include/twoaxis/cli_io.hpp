#pragma once

// Configuration loading, grid parsing, unit conversion and CSV/JSON
// persistence for the command-line front end.

#include "twoaxis/error.hpp"
#include "twoaxis/experiments.hpp"
#include "twoaxis/model_builder.hpp"
#include "twoaxis/squeezing_metrics.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace twoaxis {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Grids

namespace detail {

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

inline int parse_int(const std::string& raw, const std::string& field) {
  const std::string s = trim(raw);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
    fail(ErrorCategory::config, field + ": '" + raw + "' is not an integer");
  return v;
}

inline double parse_double(const std::string& raw, const std::string& field) {
  const std::string s = trim(raw);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
    fail(ErrorCategory::config, field + ": '" + raw + "' is not a finite number");
  return v;
}

}  // namespace detail

/// `start:stop:step` (inclusive of stop when it lies on the lattice) or a
/// comma-separated list.
inline std::vector<int> parse_int_grid(const std::string& text, const std::string& field = "grid") {
  if (text.find(':') != std::string::npos) {
    const auto parts = detail::split(text, ':');
    if (parts.size() != 3) fail(ErrorCategory::config, field + ": expected start:stop:step, got '" + text + "'");
    const int start = detail::parse_int(parts[0], field);
    const int stop = detail::parse_int(parts[1], field);
    const int step = detail::parse_int(parts[2], field);
    if (step <= 0) fail(ErrorCategory::config, field + ": step must be positive");
    if (stop < start) fail(ErrorCategory::config, field + ": stop is below start");
    std::vector<int> g;
    for (long long v = start; v <= stop; v += step) g.push_back(static_cast<int>(v));
    return g;
  }
  std::vector<int> g;
  for (const auto& p : detail::split(text, ',')) g.push_back(detail::parse_int(p, field));
  for (std::size_t i = 1; i < g.size(); ++i)
    if (g[i] <= g[i - 1]) fail(ErrorCategory::config, field + ": values must be strictly ascending");
  return g;
}

/// `start:stop:count` (count points including both ends) or a comma-separated list.
inline std::vector<double> parse_real_grid(const std::string& text, const std::string& field = "grid") {
  if (text.find(':') != std::string::npos) {
    const auto parts = detail::split(text, ':');
    if (parts.size() != 3) fail(ErrorCategory::config, field + ": expected start:stop:count, got '" + text + "'");
    const double start = detail::parse_double(parts[0], field);
    const double stop = detail::parse_double(parts[1], field);
    const int count = detail::parse_int(parts[2], field);
    if (count < 1) fail(ErrorCategory::config, field + ": count must be >= 1");
    if (count == 1) {
      if (start != stop) fail(ErrorCategory::config, field + ": a single point needs start == stop");
      return {start};
    }
    if (!(stop > start)) fail(ErrorCategory::config, field + ": stop must exceed start");
    return uniform_grid(start, stop, count);
  }
  std::vector<double> g;
  for (const auto& p : detail::split(text, ',')) g.push_back(detail::parse_double(p, field));
  for (std::size_t i = 1; i < g.size(); ++i)
    if (!(g[i] > g[i - 1])) fail(ErrorCategory::config, field + ": values must be strictly ascending");
  return g;
}

// ---------------------------------------------------------------------------
// Units

enum class UnitSystem { dimensionless, physical };

inline const char* unit_name(UnitSystem u) { return u == UnitSystem::physical ? "physical" : "dimensionless"; }

inline UnitSystem parse_units(const std::string& s) {
  if (s == "dimensionless") return UnitSystem::dimensionless;
  if (s == "physical") return UnitSystem::physical;
  fail(ErrorCategory::config, "units: expected 'dimensionless' or 'physical', got '" + s + "'");
}

/// Physical inputs are nu = omega / 2pi in MHz; internal values are angular
/// frequencies in rad/us, so times come out in microseconds.
inline double mhz_to_angular(double nu_mhz) { return 2.0 * kPi * nu_mhz; }
inline double angular_to_mhz(double omega) { return omega / (2.0 * kPi); }

inline RamanDriveParams to_angular(RamanDriveParams p) {
  for (auto* arr : {&p.coupling_g_r, &p.coupling_g_s, &p.rabi_r, &p.rabi_s, &p.detuning_r, &p.detuning_s})
    for (auto& v : *arr) v = mhz_to_angular(v);
  p.cavity_detuning_a = mhz_to_angular(p.cavity_detuning_a);
  p.cavity_detuning_b = mhz_to_angular(p.cavity_detuning_b);
  p.atomic_detuning_1 = mhz_to_angular(p.atomic_detuning_1);
  return p;
}

inline TwoModeDickeParams to_angular(TwoModeDickeParams p) {
  p.omega_a_eff = mhz_to_angular(p.omega_a_eff);
  p.omega_b_eff = mhz_to_angular(p.omega_b_eff);
  p.omega_0 = mhz_to_angular(p.omega_0);
  p.lambda_1 = mhz_to_angular(p.lambda_1);
  p.lambda_2 = mhz_to_angular(p.lambda_2);
  return p;
}

inline TwoAxisParams to_angular(TwoAxisParams p) {
  p.q = mhz_to_angular(p.q);
  p.omega_0 = mhz_to_angular(p.omega_0);
  return p;
}

// ---------------------------------------------------------------------------
// JSON views of the parameter types

inline json to_json(const RamanDriveParams& p) {
  auto pair = [](const std::array<double, 2>& a) { return json::array({a[0], a[1]}); };
  return {{"g_r", pair(p.coupling_g_r)},         {"g_s", pair(p.coupling_g_s)},
          {"rabi_r", pair(p.rabi_r)},            {"rabi_s", pair(p.rabi_s)},
          {"delta_r", pair(p.detuning_r)},       {"delta_s", pair(p.detuning_s)},
          {"phi_r", pair(p.phase_r)},            {"phi_s", pair(p.phase_s)},
          {"delta_a", p.cavity_detuning_a},      {"delta_b", p.cavity_detuning_b},
          {"delta_1", p.atomic_detuning_1},      {"atom_count", p.atom_count}};
}

inline json to_json(const TwoModeDickeParams& p) {
  return {{"omega_a", p.omega_a_eff}, {"omega_b", p.omega_b_eff}, {"omega_0", p.omega_0},
          {"lambda_1", p.lambda_1},   {"lambda_2", p.lambda_2},   {"atom_count", p.atom_count},
          {"eta", p.eta}};
}

inline json to_json(const TwoAxisParams& p) {
  return {{"q", p.q}, {"chi", p.chi}, {"omega_0", p.omega_0}, {"atom_count", p.atom_count}};
}

inline json to_json(const DriveValidation& v) {
  return {{"ratio_min", v.ratio_min},
          {"worst_detuning_ratio", std::isfinite(v.worst_detuning_ratio) ? json(v.worst_detuning_ratio) : json(nullptr)},
          {"large_detuning", v.large_detuning},
          {"shift_residual", {v.shift_residual[0], v.shift_residual[1]}},
          {"coupling_residual", {v.coupling_residual[0], v.coupling_residual[1]}},
          {"phase_matched", {v.phase_matched[0], v.phase_matched[1]}},
          {"phase_convention", v.phase_convention},
          {"lambda_sign_absorbed", {v.lambda_sign_absorbed[0], v.lambda_sign_absorbed[1]}},
          {"matched_conditions", v.matched_conditions}};
}

inline json to_json(const DispersiveVerdict& v) {
  return {{"ratio", std::isfinite(v.ratio) ? json(v.ratio) : json(nullptr)},
          {"warn_threshold", v.warn_threshold},
          {"dispersive", v.dispersive}};
}

// ---------------------------------------------------------------------------
// Config

enum class ParamLevel { none, raw, dicke, two_axis };

inline const char* level_name(ParamLevel l) {
  switch (l) {
    case ParamLevel::raw: return "raw";
    case ParamLevel::dicke: return "dicke";
    case ParamLevel::two_axis: return "two_axis";
    case ParamLevel::none: break;
  }
  return "none";
}

/// Everything a run can be configured with. Optional fields are unset when
/// neither the config file nor a flag supplied them.
struct RunConfig {
  UnitSystem units = UnitSystem::dimensionless;
  ParamLevel level = ParamLevel::none;
  RamanDriveParams raw;
  TwoModeDickeParams dicke;
  TwoAxisParams two_axis;

  std::optional<std::string> n_grid, chi_grid, omega0_grid;
  std::optional<double> t_max;
  std::optional<int> points;
  std::optional<int> cutoff_a, cutoff_b;
  std::optional<std::string> method;
  std::optional<double> relative_tolerance;
  std::optional<double> audit_tolerance;
  std::optional<double> dispersive_ratio;
  std::optional<int> start_cutoff, max_doublings;
  std::optional<std::string> output_dir;
  std::optional<bool> strict;
  std::optional<unsigned> threads;
  json estimate = json::object();
};

namespace detail {

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) fail(ErrorCategory::config, where + key + ": unknown field");
}

inline double get_number(const json& obj, const std::string& key, const std::string& where, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) fail(ErrorCategory::config, where + key + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(ErrorCategory::config, where + key + ": must be finite");
  return d;
}

inline int get_int(const json& obj, const std::string& key, const std::string& where, int fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) fail(ErrorCategory::config, where + key + ": expected an integer");
  return v.get<int>();
}

inline std::array<double, 2> get_pair(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) return {0.0, 0.0};
  const auto& v = obj.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    fail(ErrorCategory::config, where + key + ": expected an array of two numbers [pair 1, pair 2]");
  return {v[0].get<double>(), v[1].get<double>()};
}

inline std::string get_string(const json& v, const std::string& where) {
  if (!v.is_string()) fail(ErrorCategory::config, where + ": expected a string");
  return v.get<std::string>();
}

}  // namespace detail

inline RamanDriveParams parse_raw_block(const json& b) {
  const std::string w = "raw.";
  if (!b.is_object()) fail(ErrorCategory::config, "raw: expected an object");
  detail::reject_unknown(b, {"g_r", "g_s", "rabi_r", "rabi_s", "delta_r", "delta_s", "phi_r", "phi_s", "delta_a",
                             "delta_b", "delta_1", "atom_count"},
                         w);
  RamanDriveParams p;
  p.coupling_g_r = detail::get_pair(b, "g_r", w);
  p.coupling_g_s = detail::get_pair(b, "g_s", w);
  p.rabi_r = detail::get_pair(b, "rabi_r", w);
  p.rabi_s = detail::get_pair(b, "rabi_s", w);
  p.detuning_r = detail::get_pair(b, "delta_r", w);
  p.detuning_s = detail::get_pair(b, "delta_s", w);
  p.phase_r = detail::get_pair(b, "phi_r", w);
  p.phase_s = detail::get_pair(b, "phi_s", w);
  p.cavity_detuning_a = detail::get_number(b, "delta_a", w, 0.0);
  p.cavity_detuning_b = detail::get_number(b, "delta_b", w, 0.0);
  p.atomic_detuning_1 = detail::get_number(b, "delta_1", w, 0.0);
  p.atom_count = detail::get_int(b, "atom_count", w, 0);
  if (!b.contains("atom_count")) fail(ErrorCategory::config, "raw.atom_count: required field missing");
  return p;
}

inline TwoModeDickeParams parse_dicke_block(const json& b) {
  const std::string w = "dicke.";
  if (!b.is_object()) fail(ErrorCategory::config, "dicke: expected an object");
  detail::reject_unknown(b, {"omega_a", "omega_b", "omega_0", "lambda_1", "lambda_2", "atom_count"}, w);
  for (const char* req : {"omega_a", "omega_b", "atom_count"})
    if (!b.contains(req)) fail(ErrorCategory::config, w + req + ": required field missing");
  TwoModeDickeParams p;
  p.omega_a_eff = detail::get_number(b, "omega_a", w, 0.0);
  p.omega_b_eff = detail::get_number(b, "omega_b", w, 0.0);
  p.omega_0 = detail::get_number(b, "omega_0", w, 0.0);
  p.lambda_1 = detail::get_number(b, "lambda_1", w, 0.0);
  p.lambda_2 = detail::get_number(b, "lambda_2", w, 0.0);
  p.atom_count = detail::get_int(b, "atom_count", w, 0);
  return p;
}

inline TwoAxisParams parse_two_axis_block(const json& b) {
  const std::string w = "two_axis.";
  if (!b.is_object()) fail(ErrorCategory::config, "two_axis: expected an object");
  detail::reject_unknown(b, {"q", "chi", "omega_0", "atom_count"}, w);
  if (!b.contains("atom_count")) fail(ErrorCategory::config, "two_axis.atom_count: required field missing");
  TwoAxisParams p;
  p.q = detail::get_number(b, "q", w, 1.0);
  p.chi = detail::get_number(b, "chi", w, 0.0);
  p.omega_0 = detail::get_number(b, "omega_0", w, 0.0);
  p.atom_count = detail::get_int(b, "atom_count", w, 0);
  return p;
}

/// Parses a JSON config document. Unknown keys are rejected by name.
inline RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) fail(ErrorCategory::config, "config: top level must be an object");
  detail::reject_unknown(doc,
                         {"units", "raw", "dicke", "two_axis", "n_grid", "chi_grid", "omega0_grid", "t_max", "points",
                          "cutoff_a", "cutoff_b", "method", "relative_tolerance", "audit_tolerance",
                          "dispersive_ratio", "start_cutoff", "max_doublings", "output_dir", "strict", "threads",
                          "estimate"},
                         "");
  RunConfig c;
  if (doc.contains("units")) c.units = parse_units(detail::get_string(doc["units"], "units"));
  int levels = 0;
  if (doc.contains("raw")) {
    c.raw = parse_raw_block(doc["raw"]);
    c.level = ParamLevel::raw;
    ++levels;
  }
  if (doc.contains("dicke")) {
    c.dicke = parse_dicke_block(doc["dicke"]);
    c.level = ParamLevel::dicke;
    ++levels;
  }
  if (doc.contains("two_axis")) {
    c.two_axis = parse_two_axis_block(doc["two_axis"]);
    c.level = ParamLevel::two_axis;
    ++levels;
  }
  if (levels > 1)
    fail(ErrorCategory::config, "raw/dicke/two_axis: exactly one parameter level may be given, found " +
                                    std::to_string(levels));
  auto str = [&](const char* k, std::optional<std::string>& dst) {
    if (doc.contains(k)) dst = detail::get_string(doc[k], k);
  };
  str("n_grid", c.n_grid);
  str("chi_grid", c.chi_grid);
  str("omega0_grid", c.omega0_grid);
  str("method", c.method);
  str("output_dir", c.output_dir);
  auto num = [&](const char* k, std::optional<double>& dst) {
    if (doc.contains(k)) dst = detail::get_number(doc, k, "", 0.0);
  };
  num("t_max", c.t_max);
  num("relative_tolerance", c.relative_tolerance);
  num("audit_tolerance", c.audit_tolerance);
  num("dispersive_ratio", c.dispersive_ratio);
  auto integer = [&](const char* k, std::optional<int>& dst) {
    if (doc.contains(k)) dst = detail::get_int(doc, k, "", 0);
  };
  integer("points", c.points);
  integer("cutoff_a", c.cutoff_a);
  integer("cutoff_b", c.cutoff_b);
  integer("start_cutoff", c.start_cutoff);
  integer("max_doublings", c.max_doublings);
  if (doc.contains("threads")) {
    const int t = detail::get_int(doc, "threads", "", 0);
    if (t < 0) fail(ErrorCategory::config, "threads: must be >= 0");
    c.threads = static_cast<unsigned>(t);
  }
  if (doc.contains("strict")) {
    if (!doc["strict"].is_boolean()) fail(ErrorCategory::config, "strict: expected a boolean");
    c.strict = doc["strict"].get<bool>();
  }
  if (doc.contains("estimate")) {
    if (!doc["estimate"].is_object()) fail(ErrorCategory::config, "estimate: expected an object");
    c.estimate = doc["estimate"];
  }
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::io, "cannot open config file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCategory::config, "config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline constexpr const char* kTraceHeader = "time,xi_squared,optimal_angle,theta,phi,j_length";
inline constexpr const char* kSweepHeader = "axis_value,xi_m_squared,t_m";

namespace detail {

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCategory::io, "cannot write '" + path.string() + "'");
  return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) fail(ErrorCategory::io, "write to '" + path.string() + "' failed");
}

inline std::vector<std::vector<double>> read_csv(const std::filesystem::path& path, std::string_view header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::io, "cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCategory::io, "'" + path.string() + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header)
    fail(ErrorCategory::io, "'" + path.string() + "': header '" + line + "' does not match '" + std::string(header) + "'");
  const std::size_t ncol = split(header, ',').size();
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != ncol)
      fail(ErrorCategory::io, "'" + path.string() + "' line " + std::to_string(lineno) + ": expected " +
                                  std::to_string(ncol) + " columns");
    std::vector<double> row;
    for (const auto& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (c.empty() || end != c.c_str() + c.size())
        fail(ErrorCategory::io, "'" + path.string() + "' line " + std::to_string(lineno) + ": bad number '" + c + "'");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

inline void write_trace_csv(const SqueezingTrace& trace, const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  out << kTraceHeader << '\n';
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    const auto& f = trace.frame[i];
    out << format_number(trace.times[i]) << ',' << format_number(trace.xi_squared[i]) << ','
        << format_number(trace.optimal_angle[i]) << ',' << format_number(f.theta) << ',' << format_number(f.phi) << ','
        << format_number(f.j_length) << '\n';
  }
  detail::finish(out, path);
}

inline void write_sweep_csv(const SweepResult& result, const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  out << kSweepHeader << '\n';
  for (std::size_t i = 0; i < result.axis_values.size(); ++i)
    out << format_number(result.axis_values[i]) << ',' << format_number(result.xi_m_squared[i]) << ','
        << format_number(result.t_m[i]) << '\n';
  detail::finish(out, path);
}

struct TraceTable {
  std::vector<double> time, xi_squared, optimal_angle, theta, phi, j_length;
};

inline TraceTable read_trace_csv(const std::filesystem::path& path) {
  TraceTable t;
  for (const auto& r : detail::read_csv(path, kTraceHeader)) {
    t.time.push_back(r[0]);
    t.xi_squared.push_back(r[1]);
    t.optimal_angle.push_back(r[2]);
    t.theta.push_back(r[3]);
    t.phi.push_back(r[4]);
    t.j_length.push_back(r[5]);
  }
  return t;
}

struct SweepTable {
  std::vector<double> axis_value, xi_m_squared, t_m;
};

inline SweepTable read_sweep_csv(const std::filesystem::path& path) {
  SweepTable t;
  for (const auto& r : detail::read_csv(path, kSweepHeader)) {
    t.axis_value.push_back(r[0]);
    t.xi_m_squared.push_back(r[1]);
    t.t_m.push_back(r[2]);
  }
  return t;
}

/// Writes pretty JSON with sorted keys and no timestamps, so identical runs
/// produce identical bytes.
inline void write_json(const json& doc, const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  out << doc.dump(2) << '\n';
  detail::finish(out, path);
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::io, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCategory::io, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

inline constexpr const char* kOutputDirEnv = "TWOAXIS_OUTPUT_DIR";

/// --out wins, then the environment variable, then the working directory.
inline std::filesystem::path resolve_output_dir(const std::optional<std::string>& flag) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return ".";
}

// ---------------------------------------------------------------------------
// Physical estimate for the two-cavity proposal

struct PhysicalInputs {
  // All frequencies as nu = omega / 2pi in MHz.
  double g_s1 = 20.0;
  double rabi_s1 = 20.0;
  double delta_s1 = 100.0;
  double omega_a = -20.0;
  double gamma = 3.0;
  double kappa = 1.3;
  int atom_count = 100;
  double chi = -1.0;
  double omega_0 = 0.0;  // in units of |q|
};

struct PhysicalEstimate {
  PhysicalInputs inputs;
  double lambda_1_mhz = 0.0;
  double q_mhz = 0.0;
  double dispersive_ratio = 0.0;  // |omega_A| / lambda_1
  double xi_m_squared = 1.0;
  double t_m_internal = 0.0;      // units of 1/|q| (angular)
  double t_m_ns = 0.0;
  double atomic_lifetime_ns = 0.0;
  double photonic_lifetime_ns = 0.0;
  bool shorter_than_lifetimes = false;
  std::vector<std::string> flags;
};

inline json to_json(const PhysicalInputs& p) {
  return {{"g_s1_mhz", p.g_s1},       {"rabi_s1_mhz", p.rabi_s1}, {"delta_s1_mhz", p.delta_s1},
          {"omega_a_mhz", p.omega_a}, {"gamma_mhz", p.gamma},     {"kappa_mhz", p.kappa},
          {"atom_count", p.atom_count}, {"chi", p.chi},           {"omega_0_over_q", p.omega_0}};
}

inline PhysicalInputs parse_physical_inputs(const json& b, PhysicalInputs p = {}) {
  const std::string w = "estimate.";
  detail::reject_unknown(b, {"g_s1", "rabi_s1", "delta_s1", "omega_a", "gamma", "kappa", "atom_count", "chi", "omega_0"},
                         w);
  p.g_s1 = detail::get_number(b, "g_s1", w, p.g_s1);
  p.rabi_s1 = detail::get_number(b, "rabi_s1", w, p.rabi_s1);
  p.delta_s1 = detail::get_number(b, "delta_s1", w, p.delta_s1);
  p.omega_a = detail::get_number(b, "omega_a", w, p.omega_a);
  p.gamma = detail::get_number(b, "gamma", w, p.gamma);
  p.kappa = detail::get_number(b, "kappa", w, p.kappa);
  p.atom_count = detail::get_int(b, "atom_count", w, p.atom_count);
  p.chi = detail::get_number(b, "chi", w, p.chi);
  p.omega_0 = detail::get_number(b, "omega_0", w, p.omega_0);
  return p;
}

/// lambda_1 = g Omega / (2 Delta) and q = -lambda_1^2 / omega_A in MHz, then
/// the internal t_m of the two-axis model converted to nanoseconds.
inline PhysicalEstimate estimate_physical(const PhysicalInputs& in, const SweepOptions& opt = {}) {
  if (in.delta_s1 == 0.0) fail(ErrorCategory::validation, "delta_s1 is zero");
  if (in.omega_a == 0.0) fail(ErrorCategory::validation, "omega_a is zero");
  if (in.gamma <= 0.0) fail(ErrorCategory::validation, "gamma must be positive");
  if (in.kappa <= 0.0) fail(ErrorCategory::validation, "kappa must be positive");
  if (in.atom_count < 2) fail(ErrorCategory::validation, "atom_count must be >= 2");
  PhysicalEstimate e;
  e.inputs = in;
  // The 2pi factors cancel: (2pi g)(2pi Omega) / (2 * 2pi Delta) = 2pi * g Omega / (2 Delta).
  e.lambda_1_mhz = std::abs(in.g_s1 * in.rabi_s1 / (2.0 * in.delta_s1));
  e.q_mhz = -e.lambda_1_mhz * e.lambda_1_mhz / in.omega_a;
  e.dispersive_ratio = e.lambda_1_mhz > 0 ? std::abs(in.omega_a) / e.lambda_1_mhz : std::numeric_limits<double>::infinity();
  if (e.q_mhz == 0.0) fail(ErrorCategory::validation, "q vanishes; no twisting dynamics");

  const double sign = e.q_mhz > 0 ? 1.0 : -1.0;
  const auto tr = two_axis_max_squeezing(TwoAxisParams{sign, in.chi, in.omega_0, in.atom_count}, opt);
  e.xi_m_squared = tr.summary.xi_m_squared;
  e.t_m_internal = tr.summary.t_m;
  e.flags = tr.flags;
  const double q_angular_per_ns = mhz_to_angular(std::abs(e.q_mhz)) * 1e-3;  // rad/us -> rad/ns
  e.t_m_ns = e.t_m_internal / q_angular_per_ns;
  e.atomic_lifetime_ns = 1e3 / mhz_to_angular(in.gamma);
  e.photonic_lifetime_ns = 1e3 / mhz_to_angular(in.kappa);
  e.shorter_than_lifetimes = e.t_m_ns < std::min(e.atomic_lifetime_ns, e.photonic_lifetime_ns);
  return e;
}

inline json to_json(const PhysicalEstimate& e) {
  return {{"inputs", to_json(e.inputs)},
          {"lambda_1_mhz", e.lambda_1_mhz},
          {"q_mhz", e.q_mhz},
          {"dispersive_ratio", std::isfinite(e.dispersive_ratio) ? json(e.dispersive_ratio) : json(nullptr)},
          {"xi_m_squared", e.xi_m_squared},
          {"t_m_internal", e.t_m_internal},
          {"t_m_ns", e.t_m_ns},
          {"atomic_lifetime_ns", e.atomic_lifetime_ns},
          {"photonic_lifetime_ns", e.photonic_lifetime_ns},
          {"shorter_than_lifetimes", e.shorter_than_lifetimes},
          {"flags", e.flags},
          {"conversion", "nu[MHz] -> omega = 2 pi nu [rad/us]; t[ns] = t_internal / (2 pi |q/2pi| 1e-3)"}};
}

}  // namespace twoaxis
