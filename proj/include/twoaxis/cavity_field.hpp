#pragma once

// Truncated Fock-space ladder operators and Kronecker assembly on the
// product space spin (x) mode a (x) mode b.

#include "twoaxis/error.hpp"
#include "twoaxis/linalg.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace twoaxis {

/// Ladder operators on {|0>, ..., |n_max>}. The commutator [a, a+] equals the
/// identity except for the last diagonal entry, which is -n_max.
struct FockOperatorSet {
  int cutoff = 0;
  Matrix annihilate, create, number;
  Vector vacuum;

  int dimension() const { return cutoff + 1; }
};

inline FockOperatorSet build_fock_ops(int cutoff) {
  if (cutoff < 1) fail(ErrorCategory::invalid_argument, "Fock cutoff must be >= 1, got " + std::to_string(cutoff));
  FockOperatorSet f;
  f.cutoff = cutoff;
  const int d = cutoff + 1;
  f.annihilate = Matrix::Zero(d, d);
  for (int n = 1; n < d; ++n) f.annihilate(n - 1, n) = std::sqrt(static_cast<double>(n));
  f.create = f.annihilate.adjoint();
  f.number = f.create * f.annihilate;
  f.vacuum = Vector::Zero(d);
  f.vacuum(0) = 1.0;
  return f;
}

FockOperatorSet build_fock_ops(double) = delete;

/// One summand of an assembled operator: coefficient times a Kronecker
/// product with one entry per factor; std::nullopt stands for the identity.
struct TensorTerm {
  Complex coefficient{1.0, 0.0};
  std::vector<std::optional<Matrix>> operators;
};

inline SparseMatrix sparse_identity(int d) {
  SparseMatrix id(d, d);
  id.setIdentity();
  return id;
}

/// Sum over terms of coefficient * (op_0 (x) op_1 (x) ...), in the declared
/// factor order. Result is sparse; zero entries of the factors are dropped.
inline SparseMatrix tensor_assemble(std::span<const int> factor_dims, std::span<const TensorTerm> terms) {
  if (factor_dims.empty()) fail(ErrorCategory::dimension, "tensor_assemble: no factors declared");
  long long total = 1;
  for (int d : factor_dims) {
    if (d <= 0) fail(ErrorCategory::dimension, "tensor_assemble: factor dimensions must be positive");
    total *= d;
  }
  const auto dim = static_cast<Eigen::Index>(total);
  SparseMatrix result(dim, dim);
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const auto& term = terms[t];
    if (term.operators.size() != factor_dims.size())
      fail(ErrorCategory::dimension, "tensor_assemble: term " + std::to_string(t) + " assigns " +
                                         std::to_string(term.operators.size()) + " operators to " +
                                         std::to_string(factor_dims.size()) + " factors");
    SparseMatrix acc;
    for (std::size_t f = 0; f < factor_dims.size(); ++f) {
      SparseMatrix piece;
      if (term.operators[f]) {
        const Matrix& op = *term.operators[f];
        if (op.rows() != factor_dims[f] || op.cols() != factor_dims[f])
          fail(ErrorCategory::dimension, "tensor_assemble: term " + std::to_string(t) + ", factor " +
                                             std::to_string(f) + " has shape " + std::to_string(op.rows()) +
                                             "x" + std::to_string(op.cols()) + ", expected " +
                                             std::to_string(factor_dims[f]));
        piece = to_sparse(op);
      } else {
        piece = sparse_identity(factor_dims[f]);
      }
      if (f == 0) {
        acc = std::move(piece);
      } else {
        SparseMatrix next = Eigen::kroneckerProduct(acc, piece).eval();
        acc = std::move(next);
      }
    }
    result += term.coefficient * acc;
  }
  result.prune(Complex(0.0), 0.0);
  result.makeCompressed();
  return result;
}

}  // namespace twoaxis
