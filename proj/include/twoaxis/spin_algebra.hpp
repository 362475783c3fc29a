#pragma once

// Collective angular-momentum operators on the symmetric Dicke subspace
// j = N/2, plus the state container shared by every other module.
//
// Basis order is ascending m: index k <-> |j, m = -j + k>, so the all-down
// state |Jz = -j> is basis vector 0. hbar = 1.

#include "twoaxis/error.hpp"
#include "twoaxis/linalg.hpp"

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace twoaxis {

/// Tensor layout of a state vector: spin factor first, then zero or more
/// truncated Fock factors (mode a, mode b). Row-major in the factor order.
struct BasisSpec {
  int spin_dim = 0;
  std::vector<int> fock_dims;

  std::size_t dimension() const {
    return std::accumulate(fock_dims.begin(), fock_dims.end(), static_cast<std::size_t>(spin_dim),
                           std::multiplies<>());
  }
  /// Product of the non-spin factor dimensions.
  std::size_t field_dimension() const { return dimension() / static_cast<std::size_t>(spin_dim); }

  bool operator==(const BasisSpec&) const = default;
};

/// Normalized amplitude vector over a declared tensor basis.
class QuantumState {
 public:
  static constexpr double kNormTolerance = 1e-10;

  QuantumState(Vector amplitudes, BasisSpec basis, double norm_tolerance = kNormTolerance)
      : amplitudes_(std::move(amplitudes)), basis_(std::move(basis)) {
    if (basis_.spin_dim <= 0) fail(ErrorCategory::dimension, "QuantumState: spin dimension must be positive");
    for (int d : basis_.fock_dims)
      if (d <= 0) fail(ErrorCategory::dimension, "QuantumState: Fock dimension must be positive");
    if (static_cast<std::size_t>(amplitudes_.size()) != basis_.dimension())
      fail(ErrorCategory::dimension, "QuantumState: vector length " + std::to_string(amplitudes_.size()) +
                                         " does not match basis dimension " +
                                         std::to_string(basis_.dimension()));
    const double n = amplitudes_.norm();
    if (!(std::abs(n - 1.0) < norm_tolerance))
      fail(ErrorCategory::numerical, "QuantumState: norm deviates from 1 by " + std::to_string(n - 1.0));
  }

  const Vector& amplitudes() const { return amplitudes_; }
  const BasisSpec& basis() const { return basis_; }
  std::size_t dimension() const { return static_cast<std::size_t>(amplitudes_.size()); }
  bool spin_only() const { return basis_.fock_dims.empty(); }

 private:
  Vector amplitudes_;
  BasisSpec basis_;
};

struct SpinOperatorSet {
  int atom_count = 0;
  double j = 0.0;
  Matrix jx, jy, jz, jplus, jminus;

  int dimension() const { return atom_count + 1; }
  /// Magnetic quantum number of basis index k (ascending-m order).
  double m(int k) const { return -j + k; }
};

/// <j, m+1 | J+ | j, m> = sqrt(j(j+1) - m(m+1)).
inline double ladder_coefficient(double j, double m) { return std::sqrt(j * (j + 1.0) - m * (m + 1.0)); }

inline SpinOperatorSet build_spin_ops(int atom_count) {
  if (atom_count < 1)
    fail(ErrorCategory::invalid_argument, "atom_count must be >= 1, got " + std::to_string(atom_count));
  SpinOperatorSet ops;
  ops.atom_count = atom_count;
  ops.j = 0.5 * atom_count;
  const int d = atom_count + 1;
  ops.jz = Matrix::Zero(d, d);
  ops.jplus = Matrix::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    ops.jz(k, k) = ops.m(k);
    if (k + 1 < d) ops.jplus(k + 1, k) = ladder_coefficient(ops.j, ops.m(k));
  }
  ops.jminus = ops.jplus.adjoint();
  ops.jx = 0.5 * (ops.jplus + ops.jminus);
  ops.jy = (ops.jplus - ops.jminus) / (2.0 * kI);
  return ops;
}

// Atom numbers are integers; a floating-point count is a caller bug.
SpinOperatorSet build_spin_ops(double) = delete;

/// |Jz = -j>: amplitude 1 on the first basis vector.
inline QuantumState coherent_state_down(int atom_count) {
  if (atom_count < 1)
    fail(ErrorCategory::invalid_argument, "atom_count must be >= 1, got " + std::to_string(atom_count));
  Vector v = Vector::Zero(atom_count + 1);
  v(0) = 1.0;
  return QuantumState(std::move(v), BasisSpec{atom_count + 1, {}});
}

QuantumState coherent_state_down(double) = delete;

/// P = exp(i pi (Jz + j)); diagonal with entries (-1)^k.
inline Matrix parity_operator(const SpinOperatorSet& ops) {
  const int d = ops.dimension();
  Matrix p = Matrix::Zero(d, d);
  for (int k = 0; k < d; ++k) p(k, k) = (k % 2 == 0) ? 1.0 : -1.0;
  return p;
}

}  // namespace twoaxis
