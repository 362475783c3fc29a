#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <complex>

namespace twoaxis {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::ColMajor>;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double max_abs(const SparseMatrix& m) {
  double r = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) r = std::max(r, std::abs(it.value()));
  return r;
}

/// max |H - H^dagger| over all entries.
inline double hermiticity_residual(const Matrix& h) { return max_abs(Matrix(h - h.adjoint())); }

inline double hermiticity_residual(const SparseMatrix& h) {
  SparseMatrix adj = h.adjoint();
  SparseMatrix diff = h - adj;
  return max_abs(diff);
}

inline Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

inline SparseMatrix to_sparse(const Matrix& m, double drop = 0.0) {
  SparseMatrix s = m.sparseView(1.0, drop);
  s.makeCompressed();
  return s;
}

}  // namespace twoaxis
