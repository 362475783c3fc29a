#pragma once

// Parameter maps from the Raman-drive description to the two-mode Dicke
// model, the dispersive reduction to the generalized two-axis Hamiltonian,
// and builders for both Hamiltonians.
//
//   H_dicke = wA a+a + wB b+b + w0 Jz + l1 Jx (a+ + a) + l2 Jy (b+ + b)
//   H_2axis = q (Jx^2 + chi Jy^2) + w0 Jz,   q = -l1^2/wA,  chi = wA l2^2 / (wB l1^2)
//
// All frequencies are angular; hbar = 1.

#include "twoaxis/cavity_field.hpp"
#include "twoaxis/error.hpp"
#include "twoaxis/linalg.hpp"
#include "twoaxis/spin_algebra.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace twoaxis {

/// Raw drive/cavity parameters. Index 0 is pair 1 (mode a), index 1 is
/// pair 2 (mode b).
struct RamanDriveParams {
  std::array<double, 2> coupling_g_r{};
  std::array<double, 2> coupling_g_s{};
  std::array<double, 2> rabi_r{};
  std::array<double, 2> rabi_s{};
  std::array<double, 2> detuning_r{};
  std::array<double, 2> detuning_s{};
  std::array<double, 2> phase_r{};
  std::array<double, 2> phase_s{};
  double cavity_detuning_a = 0.0;
  double cavity_detuning_b = 0.0;
  double atomic_detuning_1 = 0.0;
  int atom_count = 1;
};

struct TwoModeDickeParams {
  double omega_a_eff = 0.0;
  double omega_b_eff = 0.0;
  double omega_0 = 0.0;
  double lambda_1 = 0.0;
  double lambda_2 = 0.0;
  int atom_count = 1;
  double eta = 0.0;  // coefficient of a+a Jz; must vanish to build the Dicke model
};

struct TwoAxisParams {
  double q = 0.0;
  double chi = 0.0;
  double omega_0 = 0.0;
  int atom_count = 1;
};

struct DriveValidation {
  double ratio_min = 10.0;
  double worst_detuning_ratio = 0.0;  // min over branches of |Delta| / max(|Omega|, |g|)
  bool large_detuning = false;
  std::array<double, 2> shift_residual{};     // |g_r^2/D_r - g_s^2/D_s|
  std::array<double, 2> coupling_residual{};  // |Omega_r g_r/D_r - Omega_s g_s/D_s|
  std::array<bool, 2> phase_matched{};        // phi_s == -phi_r (mod 2 pi)
  bool phase_convention = false;              // phi_1 = 0, phi_2 = -pi/2
  std::array<bool, 2> lambda_sign_absorbed{};  // g Omega / Delta was negative
  bool matched_conditions = false;
};

struct DeriveResult {
  TwoModeDickeParams params;
  DriveValidation validation;
};

namespace detail {

inline bool angle_equal(double a, double b, double tol = 1e-9) {
  const double twopi = 2.0 * kPi;
  double d = std::fmod(a - b, twopi);
  if (d < 0) d += twopi;
  return d < tol || twopi - d < tol;
}

inline void require_finite(double v, const char* field) {
  if (!std::isfinite(v)) fail(ErrorCategory::validation, std::string(field) + " is not finite");
}

}  // namespace detail

inline DeriveResult derive_effective_params(const RamanDriveParams& raw, double ratio_min = 10.0) {
  if (raw.atom_count < 1) fail(ErrorCategory::invalid_argument, "atom_count must be >= 1");
  static constexpr std::array<const char*, 2> r_names{"detuning_r[1]", "detuning_r[2]"};
  static constexpr std::array<const char*, 2> s_names{"detuning_s[1]", "detuning_s[2]"};
  for (int i = 0; i < 2; ++i) {
    if (raw.detuning_r[i] == 0.0) fail(ErrorCategory::validation, std::string(r_names[i]) + " is zero");
    if (raw.detuning_s[i] == 0.0) fail(ErrorCategory::validation, std::string(s_names[i]) + " is zero");
  }

  const double n = raw.atom_count;
  const auto& gr = raw.coupling_g_r;
  const auto& gs = raw.coupling_g_s;
  const auto& wr = raw.rabi_r;
  const auto& ws = raw.rabi_s;
  const auto& dr = raw.detuning_r;
  const auto& ds = raw.detuning_s;

  DeriveResult out;
  auto& p = out.params;
  p.atom_count = raw.atom_count;
  p.omega_0 = raw.atomic_detuning_1 +
              0.25 * (ws[0] * ws[0] / ds[0] + ws[1] * ws[1] / ds[1] - wr[0] * wr[0] / dr[0] - wr[1] * wr[1] / dr[1]);
  p.omega_a_eff = raw.cavity_detuning_a + 0.5 * n * (gr[0] * gr[0] / dr[0] + gs[0] * gs[0] / ds[0]);
  p.omega_b_eff = raw.cavity_detuning_b + 0.5 * n * (gr[1] * gr[1] / dr[1] + gs[1] * gs[1] / ds[1]);
  p.eta = gr[0] * gr[0] / dr[0] + gr[1] * gr[1] / dr[1] - gs[0] * gs[0] / ds[0] - gs[1] * gs[1] / ds[1];

  auto& v = out.validation;
  v.ratio_min = ratio_min;
  v.worst_detuning_ratio = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 2; ++i) {
    const double ref_r = std::max(std::abs(wr[i]), std::abs(gr[i]));
    const double ref_s = std::max(std::abs(ws[i]), std::abs(gs[i]));
    if (ref_r > 0) v.worst_detuning_ratio = std::min(v.worst_detuning_ratio, std::abs(dr[i]) / ref_r);
    if (ref_s > 0) v.worst_detuning_ratio = std::min(v.worst_detuning_ratio, std::abs(ds[i]) / ref_s);
    v.shift_residual[i] = std::abs(gr[i] * gr[i] / dr[i] - gs[i] * gs[i] / ds[i]);
    v.coupling_residual[i] = std::abs(wr[i] * gr[i] / dr[i] - ws[i] * gs[i] / ds[i]);
    v.phase_matched[i] = detail::angle_equal(raw.phase_s[i], -raw.phase_r[i]);
  }
  v.large_detuning = v.worst_detuning_ratio >= ratio_min;
  v.phase_convention = detail::angle_equal(raw.phase_s[0], 0.0) && detail::angle_equal(raw.phase_s[1], -0.5 * kPi);

  // The s-branch defines lambda_i; under matched conditions the r-branch agrees.
  const double l1 = 0.5 * gs[0] * ws[0] / ds[0];
  const double l2 = 0.5 * gs[1] * ws[1] / ds[1];
  v.lambda_sign_absorbed = {l1 < 0, l2 < 0};
  p.lambda_1 = std::abs(l1);
  p.lambda_2 = std::abs(l2);

  const double scale = std::max({std::abs(gr[0] * gr[0] / dr[0]), std::abs(gs[0] * gs[0] / ds[0]),
                                 std::abs(gr[1] * gr[1] / dr[1]), std::abs(gs[1] * gs[1] / ds[1]),
                                 std::abs(wr[0] * gr[0] / dr[0]), std::abs(wr[1] * gr[1] / dr[1]), 1e-300});
  v.matched_conditions = true;
  for (int i = 0; i < 2; ++i)
    v.matched_conditions = v.matched_conditions && v.shift_residual[i] <= 1e-9 * scale &&
                           v.coupling_residual[i] <= 1e-9 * scale && v.phase_matched[i];

  detail::require_finite(p.omega_0, "omega_0");
  detail::require_finite(p.omega_a_eff, "omega_a_eff");
  detail::require_finite(p.omega_b_eff, "omega_b_eff");
  detail::require_finite(p.lambda_1, "lambda_1");
  detail::require_finite(p.lambda_2, "lambda_2");
  return out;
}

struct DispersiveVerdict {
  double ratio = 0.0;  // min(|wA|, |wB|) / max(l1, l2); +inf when uncoupled
  double warn_threshold = 10.0;
  bool dispersive = false;
};

struct MapResult {
  TwoAxisParams params;
  DispersiveVerdict verdict;
};

inline DispersiveVerdict dispersive_verdict(const TwoModeDickeParams& eff, double warn_threshold = 10.0) {
  DispersiveVerdict v;
  v.warn_threshold = warn_threshold;
  const double lmax = std::max(eff.lambda_1, eff.lambda_2);
  const double wmin = std::min(std::abs(eff.omega_a_eff), std::abs(eff.omega_b_eff));
  v.ratio = lmax > 0 ? wmin / lmax : std::numeric_limits<double>::infinity();
  v.dispersive = v.ratio >= warn_threshold;
  return v;
}

inline MapResult map_to_two_axis(const TwoModeDickeParams& eff, double warn_threshold = 10.0) {
  if (eff.omega_a_eff == 0.0) fail(ErrorCategory::validation, "omega_a_eff is zero; dispersive elimination undefined");
  if (eff.omega_b_eff == 0.0) fail(ErrorCategory::validation, "omega_b_eff is zero; dispersive elimination undefined");
  if (eff.lambda_1 < 0 || eff.lambda_2 < 0)
    fail(ErrorCategory::validation, "lambda_1 and lambda_2 must be non-negative");
  if (eff.lambda_1 == 0.0 && eff.lambda_2 != 0.0)
    fail(ErrorCategory::validation,
         "lambda_1 is zero while lambda_2 is not: chi is undefined; swap the roles of the two modes");
  MapResult out;
  out.verdict = dispersive_verdict(eff, warn_threshold);
  auto& p = out.params;
  p.atom_count = eff.atom_count;
  p.omega_0 = eff.omega_0;
  p.q = -eff.lambda_1 * eff.lambda_1 / eff.omega_a_eff;
  p.chi = eff.lambda_1 == 0.0
              ? 0.0
              : (eff.omega_a_eff * eff.lambda_2 * eff.lambda_2) / (eff.omega_b_eff * eff.lambda_1 * eff.lambda_1);
  return out;
}

/// Two-mode Dicke Hamiltonian on spin (x) a (x) b together with its layout.
struct DickeHamiltonian {
  SparseMatrix matrix;
  BasisSpec basis;
  /// Conserved parity (-1)^{(m + j) + n_a + n_b} of each basis index (0 or 1).
  std::vector<int> parity_sector;
};

inline constexpr long long kDefaultMaxDimension = 200000;

inline DickeHamiltonian build_two_mode_dicke(const TwoModeDickeParams& eff, int cutoff_a, int cutoff_b,
                                             long long max_dimension = kDefaultMaxDimension) {
  if (cutoff_a < 1 || cutoff_b < 1) fail(ErrorCategory::invalid_argument, "Fock cutoffs must be >= 1");
  const double scale = std::max({std::abs(eff.omega_a_eff), std::abs(eff.omega_b_eff), std::abs(eff.omega_0),
                                 eff.lambda_1, eff.lambda_2, 1e-300});
  if (std::abs(eff.eta) > 1e-9 * scale)
    fail(ErrorCategory::validation, "eta = " + std::to_string(eff.eta) +
                                        " is nonzero; the matched conditions required for the two-mode "
                                        "Dicke form do not hold");
  const long long dim = static_cast<long long>(eff.atom_count + 1) * (cutoff_a + 1) * (cutoff_b + 1);
  if (dim > max_dimension)
    fail(ErrorCategory::dimension, "Hilbert-space dimension " + std::to_string(dim) + " exceeds the limit " +
                                       std::to_string(max_dimension));

  const SpinOperatorSet s = build_spin_ops(eff.atom_count);
  const FockOperatorSet a = build_fock_ops(cutoff_a);
  const FockOperatorSet b = build_fock_ops(cutoff_b);
  const std::vector<int> dims{s.dimension(), a.dimension(), b.dimension()};
  const Matrix xa = a.annihilate + a.create;
  const Matrix xb = b.annihilate + b.create;

  std::vector<TensorTerm> terms;
  terms.push_back({eff.omega_a_eff, {std::nullopt, a.number, std::nullopt}});
  terms.push_back({eff.omega_b_eff, {std::nullopt, std::nullopt, b.number}});
  terms.push_back({eff.omega_0, {s.jz, std::nullopt, std::nullopt}});
  terms.push_back({eff.lambda_1, {s.jx, xa, std::nullopt}});
  terms.push_back({eff.lambda_2, {s.jy, std::nullopt, xb}});

  DickeHamiltonian h;
  h.matrix = tensor_assemble(dims, terms);
  h.basis = BasisSpec{dims[0], {dims[1], dims[2]}};
  h.parity_sector.resize(static_cast<std::size_t>(dim));
  std::size_t idx = 0;
  for (int k = 0; k < dims[0]; ++k)
    for (int na = 0; na < dims[1]; ++na)
      for (int nb = 0; nb < dims[2]; ++nb) h.parity_sector[idx++] = (k + na + nb) % 2;
  return h;
}

/// |Jz = -j> (x) |0>_a (x) |0>_b.
inline QuantumState dicke_initial_state(int atom_count, int cutoff_a, int cutoff_b) {
  const BasisSpec basis{atom_count + 1, {cutoff_a + 1, cutoff_b + 1}};
  Vector v = Vector::Zero(static_cast<Eigen::Index>(basis.dimension()));
  v(0) = 1.0;
  return QuantumState(std::move(v), basis);
}

inline Matrix build_two_axis(const TwoAxisParams& params, const SpinOperatorSet& ops) {
  if (ops.atom_count != params.atom_count)
    fail(ErrorCategory::dimension, "build_two_axis: operator set is for N = " + std::to_string(ops.atom_count) +
                                       ", parameters for N = " + std::to_string(params.atom_count));
  detail::require_finite(params.chi, "chi");
  detail::require_finite(params.q, "q");
  detail::require_finite(params.omega_0, "omega_0");
  Matrix h = params.q * (ops.jx * ops.jx + params.chi * ops.jy * ops.jy) + params.omega_0 * ops.jz;
  // Symmetrize away rounding so the result is Hermitian to machine precision.
  return 0.5 * (h + h.adjoint());
}

inline Matrix build_two_axis(const TwoAxisParams& params) { return build_two_axis(params, build_spin_ops(params.atom_count)); }

/// Parity (-1)^{m + j} of each spin basis index; conserved by the two-axis Hamiltonian.
inline std::vector<int> spin_parity_sectors(int atom_count) {
  std::vector<int> s(static_cast<std::size_t>(atom_count + 1));
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = static_cast<int>(k % 2);
  return s;
}

}  // namespace twoaxis
