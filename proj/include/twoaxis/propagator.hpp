#pragma once

// Exact evolution |psi(t)> = exp(-iHt)|psi0> under a time-independent
// Hermitian Hamiltonian.
//
// Two engines share one interface:
//  * spectral: Hermitian eigendecomposition, then phases. Optional sector
//    labels (a conserved quantum number per basis index) split H into
//    independent blocks; blocks the initial state does not touch are skipped.
//  * krylov: Lanczos with adaptive step size on the sparse Hamiltonian.

#include "twoaxis/error.hpp"
#include "twoaxis/linalg.hpp"
#include "twoaxis/spin_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace twoaxis {

enum class EvolutionMethod { automatic, spectral, krylov };

inline constexpr Eigen::Index kSpectralMaxDimension = 4096;

inline const char* method_name(EvolutionMethod m) {
  switch (m) {
    case EvolutionMethod::automatic: return "automatic";
    case EvolutionMethod::spectral: return "spectral";
    case EvolutionMethod::krylov: return "krylov";
  }
  return "unknown";
}

struct KrylovOptions {
  int subspace_dim = 30;
  double step_tolerance = 1e-12;  // a-posteriori Lanczos error bound per accepted step
};

class EvolutionPlan {
 public:
  static constexpr double kHermiticityTolerance = 1e-10;

  EvolutionPlan(SparseMatrix hamiltonian, std::vector<double> times,
                EvolutionMethod method = EvolutionMethod::automatic, double norm_tolerance = 1e-10,
                std::vector<int> sectors = {})
      : hamiltonian_(std::move(hamiltonian)),
        times_(std::move(times)),
        method_(method),
        norm_tolerance_(norm_tolerance),
        sectors_(std::move(sectors)) {
    if (hamiltonian_.rows() != hamiltonian_.cols() || hamiltonian_.rows() == 0)
      fail(ErrorCategory::dimension, "EvolutionPlan: Hamiltonian must be square and nonempty");
    const double res = hermiticity_residual(hamiltonian_);
    if (!(res < kHermiticityTolerance))
      fail(ErrorCategory::numerical, "EvolutionPlan: Hamiltonian is not Hermitian (residual " + std::to_string(res) + ")");
    if (times_.empty()) fail(ErrorCategory::invalid_argument, "EvolutionPlan: time list is empty");
    if (times_.front() < 0.0) fail(ErrorCategory::invalid_argument, "EvolutionPlan: first time must be >= 0");
    for (std::size_t k = 1; k < times_.size(); ++k)
      if (!(times_[k] >= times_[k - 1])) fail(ErrorCategory::invalid_argument, "EvolutionPlan: times must be ascending");
    if (!sectors_.empty() && static_cast<Eigen::Index>(sectors_.size()) != hamiltonian_.rows())
      fail(ErrorCategory::dimension, "EvolutionPlan: sector label count does not match dimension");
    if (method_ == EvolutionMethod::automatic)
      method_ = hamiltonian_.rows() <= kSpectralMaxDimension ? EvolutionMethod::spectral : EvolutionMethod::krylov;
  }

  EvolutionPlan(const Matrix& hamiltonian, std::vector<double> times,
                EvolutionMethod method = EvolutionMethod::automatic, double norm_tolerance = 1e-10,
                std::vector<int> sectors = {})
      : EvolutionPlan(to_sparse(hamiltonian), std::move(times), method, norm_tolerance, std::move(sectors)) {}

  const SparseMatrix& hamiltonian() const { return hamiltonian_; }
  const std::vector<double>& times() const { return times_; }
  EvolutionMethod method() const { return method_; }
  double norm_tolerance() const { return norm_tolerance_; }
  const std::vector<int>& sectors() const { return sectors_; }

 private:
  SparseMatrix hamiltonian_;
  std::vector<double> times_;
  EvolutionMethod method_;
  double norm_tolerance_;
  std::vector<int> sectors_;
};

/// exp(-iHt)|psi0> for one fixed initial vector, at any set of times.
class Propagator {
 public:
  Propagator(const SparseMatrix& h, const Vector& initial, EvolutionMethod method = EvolutionMethod::automatic,
             std::span<const int> sectors = {}, KrylovOptions krylov = {})
      : dim_(h.rows()), krylov_(krylov) {
    if (h.rows() != h.cols()) fail(ErrorCategory::dimension, "Propagator: Hamiltonian must be square");
    if (initial.size() != dim_) fail(ErrorCategory::dimension, "Propagator: initial state dimension mismatch");
    method_ = method == EvolutionMethod::automatic
                  ? (dim_ <= kSpectralMaxDimension ? EvolutionMethod::spectral : EvolutionMethod::krylov)
                  : method;
    if (method_ == EvolutionMethod::spectral)
      init_spectral(h, initial, sectors);
    else
      init_krylov(h, initial);
  }

  EvolutionMethod method() const { return method_; }
  Eigen::Index dimension() const { return dim_; }

  /// Eigenvalues of every block that carries weight, in block order.
  RealVector spectrum() const {
    Eigen::Index n = 0;
    for (const auto& b : blocks_) n += b.energies.size();
    RealVector all(n);
    Eigen::Index off = 0;
    for (const auto& b : blocks_) {
      all.segment(off, b.energies.size()) = b.energies;
      off += b.energies.size();
    }
    return all;
  }

  Vector state_at(double t) const {
    if (method_ == EvolutionMethod::spectral) {
      Vector psi = Vector::Zero(dim_);
      for (const auto& b : blocks_) {
        Vector phased(b.energies.size());
        for (Eigen::Index k = 0; k < phased.size(); ++k) phased(k) = b.coeffs(k) * std::exp(-kI * (b.energies(k) * t));
        const Vector part = b.vectors * phased;
        for (std::size_t r = 0; r < b.indices.size(); ++r) psi(b.indices[r]) = part(static_cast<Eigen::Index>(r));
      }
      return psi;
    }
    Vector psi = initial_;
    krylov_advance(psi, t);
    return psi;
  }

  /// States at each requested time (any order). Columns of the result.
  Matrix states_at(std::span<const double> times) const {
    const auto nt = static_cast<Eigen::Index>(times.size());
    Matrix out = Matrix::Zero(dim_, nt);
    if (nt == 0) return out;
    if (method_ == EvolutionMethod::spectral) {
      constexpr Eigen::Index kChunk = 256;
      for (const auto& b : blocks_) {
        const Eigen::Index nb = b.energies.size();
        for (Eigen::Index c0 = 0; c0 < nt; c0 += kChunk) {
          const Eigen::Index nc = std::min(kChunk, nt - c0);
          Matrix phases(nb, nc);
          for (Eigen::Index c = 0; c < nc; ++c) {
            const double t = times[static_cast<std::size_t>(c0 + c)];
            for (Eigen::Index k = 0; k < nb; ++k) phases(k, c) = b.coeffs(k) * std::exp(-kI * (b.energies(k) * t));
          }
          const Matrix part = b.vectors * phases;
          for (std::size_t r = 0; r < b.indices.size(); ++r)
            out.block(b.indices[r], c0, 1, nc) = part.row(static_cast<Eigen::Index>(r));
        }
      }
      return out;
    }
    std::vector<std::size_t> order(times.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return times[a] < times[b]; });
    Vector psi = initial_;
    double t_now = 0.0;
    for (std::size_t idx : order) {
      const double t = times[idx];
      if (t < t_now) {  // negative times: restart from the initial vector
        psi = initial_;
        t_now = 0.0;
      }
      krylov_advance(psi, t - t_now);
      t_now = t;
      out.col(static_cast<Eigen::Index>(idx)) = psi;
    }
    return out;
  }

 private:
  struct Block {
    std::vector<Eigen::Index> indices;
    RealVector energies;
    Matrix vectors;
    Vector coeffs;  // V^dagger psi0 restricted to the block
  };

  void init_spectral(const SparseMatrix& h, const Vector& initial, std::span<const int> sectors) {
    std::map<int, std::vector<Eigen::Index>> groups;
    if (sectors.empty()) {
      auto& all = groups[0];
      all.resize(static_cast<std::size_t>(dim_));
      std::iota(all.begin(), all.end(), Eigen::Index{0});
    } else {
      if (static_cast<Eigen::Index>(sectors.size()) != dim_)
        fail(ErrorCategory::dimension, "Propagator: sector label count does not match dimension");
      for (Eigen::Index i = 0; i < dim_; ++i) groups[sectors[static_cast<std::size_t>(i)]].push_back(i);
      check_sectors_conserved(h, sectors);
    }
    const Matrix dense = Matrix(h);
    for (auto& [label, idx] : groups) {
      const auto n = static_cast<Eigen::Index>(idx.size());
      Vector sub_init(n);
      for (Eigen::Index r = 0; r < n; ++r) sub_init(r) = initial(idx[static_cast<std::size_t>(r)]);
      if (sub_init.squaredNorm() == 0.0) continue;
      Matrix sub(n, n);
      for (Eigen::Index c = 0; c < n; ++c)
        for (Eigen::Index r = 0; r < n; ++r) sub(r, c) = dense(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(c)]);
      Eigen::SelfAdjointEigenSolver<Matrix> es(sub);
      if (es.info() != Eigen::Success) fail(ErrorCategory::numerical, "Propagator: eigendecomposition failed");
      Block b;
      b.indices = std::move(idx);
      b.energies = es.eigenvalues();
      b.vectors = es.eigenvectors();
      b.coeffs = b.vectors.adjoint() * sub_init;
      blocks_.push_back(std::move(b));
    }
  }

  static void check_sectors_conserved(const SparseMatrix& h, std::span<const int> sectors) {
    for (int k = 0; k < h.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(h, k); it; ++it)
        if (sectors[static_cast<std::size_t>(it.row())] != sectors[static_cast<std::size_t>(it.col())] &&
            it.value() != Complex(0.0))
          fail(ErrorCategory::invalid_argument, "Propagator: Hamiltonian couples different sectors");
  }

  void init_krylov(const SparseMatrix& h, const Vector& initial) {
    h_ = h;
    h_.makeCompressed();
    initial_ = initial;
  }

  // Advances psi by dt (>= 0) with Lanczos steps of adaptive length.
  void krylov_advance(Vector& psi, double dt) const {
    if (dt <= 0.0) return;
    const int m_max = static_cast<int>(std::min<Eigen::Index>(krylov_.subspace_dim, dim_));
    double done = 0.0;
    double tau = dt;
    Matrix basis(dim_, m_max + 1);
    while (done < dt) {
      const double beta0 = psi.norm();
      if (beta0 == 0.0) return;
      basis.col(0) = psi / beta0;
      std::vector<double> alpha, beta;
      int m = m_max;
      bool breakdown = false;
      for (int k = 0; k < m_max; ++k) {
        Vector w = h_ * basis.col(k);
        const double a = std::real(basis.col(k).dot(w));
        alpha.push_back(a);
        // Full reorthogonalization keeps the small basis orthonormal.
        for (int pass = 0; pass < 2; ++pass) {
          const Vector proj = basis.leftCols(k + 1).adjoint() * w;
          w -= basis.leftCols(k + 1) * proj;
        }
        const double b = w.norm();
        beta.push_back(b);
        if (b < 1e-13 * std::max(1.0, std::abs(a))) {
          m = k + 1;
          breakdown = true;
          break;
        }
        basis.col(k + 1) = w / b;
      }
      Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
      for (int k = 0; k < m; ++k) {
        tri(k, k) = alpha[static_cast<std::size_t>(k)];
        if (k + 1 < m) tri(k, k + 1) = tri(k + 1, k) = beta[static_cast<std::size_t>(k)];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
      const RealVector theta = es.eigenvalues();
      const Eigen::MatrixXd s = es.eigenvectors();
      const RealVector s0 = s.row(0).transpose();
      const double remaining = dt - done;
      tau = std::min(tau, remaining);
      Vector y;
      for (int attempt = 0;; ++attempt) {
        Vector phased(m);
        for (int k = 0; k < m; ++k) phased(k) = s0(k) * std::exp(-kI * (theta(k) * tau));
        y = s.cast<Complex>() * phased;
        const double err = breakdown ? 0.0 : beta0 * beta.back() * std::abs(y(m - 1));
        if (err <= krylov_.step_tolerance || attempt > 200) break;
        tau *= 0.5;
      }
      psi = beta0 * (basis.leftCols(m) * y);
      done += tau;
      if (breakdown)
        tau = dt - done;
      else
        tau *= 1.5;
      if (dt - done < 1e-15 * std::max(1.0, dt)) break;
    }
  }

  Eigen::Index dim_;
  EvolutionMethod method_ = EvolutionMethod::spectral;
  KrylovOptions krylov_;
  std::vector<Block> blocks_;
  SparseMatrix h_;
  Vector initial_;
};

/// Evolves `initial` to every time in the plan. Aborts if the norm drifts
/// beyond the plan's tolerance.
inline std::vector<QuantumState> evolve(const EvolutionPlan& plan, const QuantumState& initial,
                                        KrylovOptions krylov = {}) {
  if (static_cast<Eigen::Index>(initial.dimension()) != plan.hamiltonian().rows())
    fail(ErrorCategory::dimension, "evolve: state dimension " + std::to_string(initial.dimension()) +
                                       " does not match Hamiltonian dimension " +
                                       std::to_string(plan.hamiltonian().rows()));
  const Propagator prop(plan.hamiltonian(), initial.amplitudes(), plan.method(), plan.sectors(), krylov);
  const Matrix states = prop.states_at(plan.times());
  std::vector<QuantumState> out;
  out.reserve(plan.times().size());
  for (Eigen::Index c = 0; c < states.cols(); ++c) {
    const double drift = std::abs(states.col(c).norm() - 1.0);
    if (!(drift < plan.norm_tolerance()))
      fail(ErrorCategory::numerical, "evolve: norm drift " + std::to_string(drift) + " at t = " +
                                         std::to_string(plan.times()[static_cast<std::size_t>(c)]));
    out.emplace_back(states.col(c), initial.basis(), plan.norm_tolerance());
  }
  return out;
}

}  // namespace twoaxis
