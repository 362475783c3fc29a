#pragma once

// Kitagawa-Ueda squeezing factor in the mean-spin frame:
//
//   xi^2(t) = (4/N) min_phi Var(J_n1 cos(phi) + J_n2 sin(phi)),
//
// with n1, n2 spanning the plane perpendicular to <J>. The minimum over phi
// is taken in closed form from the 2x2 transverse covariance.

#include "twoaxis/error.hpp"
#include "twoaxis/linalg.hpp"
#include "twoaxis/propagator.hpp"
#include "twoaxis/spin_algebra.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace twoaxis {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// First and symmetrized second moments of (Jx, Jy, Jz).
struct SpinMoments {
  int atom_count = 0;
  Vec3 mean = Vec3::Zero();
  Mat3 second = Mat3::Zero();  // Re <J_a J_b>

  Mat3 covariance() const { return second - mean * mean.transpose(); }
  /// Var(n . J) for any real direction n.
  double variance_along(const Vec3& n) const { return n.dot(covariance() * n); }
};

/// Computes spin moments for states on spin (x) field, reusing the operator
/// matrices across calls.
class SpinMomentEvaluator {
 public:
  explicit SpinMomentEvaluator(const SpinOperatorSet& ops) : atom_count_(ops.atom_count), dim_(ops.dimension()) {
    dense_ = {ops.jx, ops.jy, ops.jz};
    for (int a = 0; a < 3; ++a) sparse_[a] = to_sparse(dense_[a]);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) products_[a][b] = dense_[a] * dense_[b];
  }

  int atom_count() const { return atom_count_; }

  SpinMoments operator()(const Vector& amplitudes, const BasisSpec& basis) const {
    if (basis.spin_dim != dim_)
      fail(ErrorCategory::dimension, "spin moments: basis spin dimension " + std::to_string(basis.spin_dim) +
                                         " does not match operator dimension " + std::to_string(dim_));
    if (static_cast<std::size_t>(amplitudes.size()) != basis.dimension())
      fail(ErrorCategory::dimension, "spin moments: amplitude vector does not match basis");
    return basis.fock_dims.empty() ? pure(amplitudes) : reduced(amplitudes, basis);
  }

  SpinMoments operator()(const QuantumState& state) const { return (*this)(state.amplitudes(), state.basis()); }

 private:
  SpinMoments pure(const Vector& psi) const {
    SpinMoments m;
    m.atom_count = atom_count_;
    std::array<Vector, 3> u;
    for (int a = 0; a < 3; ++a) u[a] = sparse_[a] * psi;
    for (int a = 0; a < 3; ++a) {
      m.mean(a) = std::real(psi.dot(u[a]));
      for (int b = a; b < 3; ++b) m.second(a, b) = m.second(b, a) = std::real(u[a].dot(u[b]));
    }
    return m;
  }

  SpinMoments reduced(const Vector& psi, const BasisSpec& basis) const {
    const auto rest = static_cast<Eigen::Index>(basis.field_dimension());
    // Row-major layout with spin first: psi[s * rest + r] = M(r, s).
    Eigen::Map<const Matrix> mat(psi.data(), rest, dim_);
    const Matrix rho = mat.transpose() * mat.conjugate();
    SpinMoments m;
    m.atom_count = atom_count_;
    auto tr = [&](const Matrix& op) { return std::real((rho.cwiseProduct(op.transpose())).sum()); };
    for (int a = 0; a < 3; ++a) {
      m.mean(a) = tr(dense_[a]);
      for (int b = a; b < 3; ++b) m.second(a, b) = m.second(b, a) = tr(products_[a][b]);
    }
    return m;
  }

  int atom_count_;
  int dim_;
  std::array<Matrix, 3> dense_;
  std::array<SparseMatrix, 3> sparse_;
  std::array<std::array<Matrix, 3>, 3> products_;
};

struct MeanSpinFrame {
  Vec3 n0 = Vec3::Zero();
  Vec3 n1 = Vec3::Zero();
  Vec3 n2 = Vec3::Zero();
  double theta = 0.0;
  double phi = 0.0;
  double j_length = 0.0;
};

/// |J| below factor * N/2 makes the frame undefined.
inline constexpr double kDegenerateFactor = 1e-8;
/// Transverse mean below this fraction of |J| is treated as the pole (phi = 0).
inline constexpr double kPoleTolerance = 1e-10;

inline MeanSpinFrame mean_spin_frame(const SpinMoments& m, double degenerate_factor = kDegenerateFactor) {
  MeanSpinFrame f;
  f.j_length = m.mean.norm();
  const double threshold = degenerate_factor * 0.5 * m.atom_count;
  if (!(f.j_length > threshold))
    fail(ErrorCategory::degenerate_frame,
         "mean spin length " + std::to_string(f.j_length) + " is below the degenerate threshold");
  const double jx = m.mean(0), jy = m.mean(1), jz = m.mean(2);
  f.theta = std::acos(std::clamp(jz / f.j_length, -1.0, 1.0));
  const double transverse = std::hypot(jx, jy);
  if (transverse <= kPoleTolerance * f.j_length) {
    f.phi = 0.0;
  } else {
    const double c = std::clamp(jx / transverse, -1.0, 1.0);  // <Jx> / (|J| sin(theta))
    f.phi = jy > 0 ? std::acos(c) : 2.0 * kPi - std::acos(c);
  }
  const double st = std::sin(f.theta), ct = std::cos(f.theta);
  const double sp = std::sin(f.phi), cp = std::cos(f.phi);
  f.n0 = Vec3(st * cp, st * sp, ct);
  f.n1 = Vec3(-sp, cp, 0.0);
  f.n2 = Vec3(ct * cp, ct * sp, -st);
  return f;
}

struct TransverseVariance {
  double variance = 0.0;
  double angle = 0.0;  // minimizing phi in [0, pi)
};

/// Closed-form minimum over phi of Var(J_n1 cos(phi) + J_n2 sin(phi)).
inline TransverseVariance min_transverse_variance(const SpinMoments& m, const MeanSpinFrame& f) {
  const Mat3 c = m.covariance();
  const double v11 = f.n1.dot(c * f.n1);
  const double v22 = f.n2.dot(c * f.n2);
  const double v12 = f.n1.dot(c * f.n2);
  const double half_diff = 0.5 * (v11 - v22);
  const double radius = std::hypot(half_diff, v12);
  TransverseVariance out;
  out.variance = 0.5 * (v11 + v22) - radius;
  // Var(phi) = mean + half_diff cos(2 phi) + v12 sin(2 phi); minimum opposite the phasor.
  double angle = 0.5 * (std::atan2(v12, half_diff) + kPi);
  if (angle >= kPi) angle -= kPi;
  if (angle < 0) angle += kPi;
  out.angle = radius == 0.0 ? 0.0 : angle;
  return out;
}

inline TransverseVariance min_transverse_variance(const QuantumState& state, const MeanSpinFrame& f,
                                                  const SpinOperatorSet& ops) {
  return min_transverse_variance(SpinMomentEvaluator(ops)(state), f);
}

inline MeanSpinFrame mean_spin_frame(const QuantumState& state, const SpinOperatorSet& ops,
                                     double degenerate_factor = kDegenerateFactor) {
  return mean_spin_frame(SpinMomentEvaluator(ops)(state), degenerate_factor);
}

inline double squeezing_factor(const SpinMoments& m) {
  const MeanSpinFrame f = mean_spin_frame(m);
  return 4.0 / m.atom_count * min_transverse_variance(m, f).variance;
}

/// Throws ErrorCategory::degenerate_frame when |J| vanishes.
inline double squeezing_factor(const QuantumState& state, const SpinOperatorSet& ops) {
  return squeezing_factor(SpinMomentEvaluator(ops)(state));
}

struct SqueezingSample {
  double xi_squared = 1.0;
  double angle = 0.0;
  MeanSpinFrame frame;
  bool degenerate = false;
};

/// Like squeezing_factor, but falls back to the smallest eigenvalue of the
/// 3x3 spin covariance (all directions) when the frame is degenerate.
inline SqueezingSample squeezing_sample(const SpinMoments& m) {
  SqueezingSample s;
  const double length = m.mean.norm();
  if (length > kDegenerateFactor * 0.5 * m.atom_count) {
    s.frame = mean_spin_frame(m);
    const auto tv = min_transverse_variance(m, s.frame);
    s.xi_squared = 4.0 / m.atom_count * tv.variance;
    s.angle = tv.angle;
    return s;
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(m.covariance());
  s.degenerate = true;
  s.xi_squared = 4.0 / m.atom_count * es.eigenvalues()(0);
  s.angle = std::numeric_limits<double>::quiet_NaN();
  s.frame.j_length = length;
  s.frame.theta = s.frame.phi = std::numeric_limits<double>::quiet_NaN();
  return s;
}

struct SqueezingSummary {
  double xi_m_squared = 1.0;
  double t_m = 0.0;
};

namespace flags {
inline constexpr const char* kNoSqueezing = "no_squeezing";
inline constexpr const char* kMinimumAtBoundary = "minimum_at_boundary";
inline constexpr const char* kWindowExtended = "window_extended";
inline constexpr const char* kDegenerateSamples = "degenerate_frame_samples";
}  // namespace flags

struct SqueezingTrace {
  std::vector<double> times;
  std::vector<double> xi_squared;
  std::vector<double> optimal_angle;
  std::vector<MeanSpinFrame> frame;
  std::vector<bool> degenerate;
  SqueezingSummary summary;
  std::vector<std::string> flags;
  double t_max = 0.0;

  bool has_flag(std::string_view f) const { return std::find(flags.begin(), flags.end(), f) != flags.end(); }
};

/// Evaluates xi^2 on a grid of times from a propagator.
inline SqueezingTrace squeezing_trace(const Propagator& prop, const BasisSpec& basis, const SpinMomentEvaluator& moments,
                                      std::span<const double> times) {
  SqueezingTrace tr;
  tr.times.assign(times.begin(), times.end());
  tr.t_max = times.empty() ? 0.0 : times.back();
  constexpr std::size_t kChunk = 512;
  for (std::size_t c0 = 0; c0 < times.size(); c0 += kChunk) {
    const std::size_t nc = std::min(kChunk, times.size() - c0);
    const Matrix states = prop.states_at(times.subspan(c0, nc));
    for (Eigen::Index c = 0; c < states.cols(); ++c) {
      const auto s = squeezing_sample(moments(states.col(c), basis));
      tr.xi_squared.push_back(s.xi_squared);
      tr.optimal_angle.push_back(s.angle);
      tr.frame.push_back(s.frame);
      tr.degenerate.push_back(s.degenerate);
    }
  }
  if (std::find(tr.degenerate.begin(), tr.degenerate.end(), true) != tr.degenerate.end())
    tr.flags.emplace_back(flags::kDegenerateSamples);
  if (!tr.xi_squared.empty()) {
    const auto it = std::min_element(tr.xi_squared.begin(), tr.xi_squared.end());
    tr.summary = {*it, tr.times[static_cast<std::size_t>(it - tr.xi_squared.begin())]};
  }
  return tr;
}

inline std::vector<double> uniform_grid(double t0, double t1, int points) {
  if (points < 2) fail(ErrorCategory::invalid_argument, "uniform_grid: need at least 2 points");
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) g[static_cast<std::size_t>(k)] = t0 + (t1 - t0) * k / (points - 1);
  g.back() = t1;
  return g;
}

struct SearchOptions {
  double t_max = 1.0;
  int grid_points = 2001;
  double relative_tolerance = 1e-6;
  bool auto_extend = true;
  double boundary_fraction = 0.05;  // minimum in the final 5% triggers one extension
  double no_squeezing_tolerance = 1e-9;
};

/// Window long enough to contain the first squeezing minimum: |q| T N >= 4 pi.
inline double default_search_window(double q, int atom_count) {
  if (q == 0.0) return 1.0;
  return 4.0 * kPi / (std::abs(q) * atom_count);
}

/// Global minimum of xi^2 over (0, t_max]: coarse grid, then Brent
/// refinement inside the bracketing grid cells. Earliest minimizer wins.
inline SqueezingTrace find_max_squeezing(const Propagator& prop, const BasisSpec& basis, const SpinOperatorSet& ops,
                                         const SearchOptions& opt) {
  if (!(opt.t_max > 0.0)) fail(ErrorCategory::invalid_argument, "find_max_squeezing: t_max must be > 0");
  const SpinMomentEvaluator moments(ops);
  double t_max = opt.t_max;
  SqueezingTrace tr;
  std::size_t k_min = 0;
  bool extended = false;
  for (;;) {
    const auto grid = uniform_grid(0.0, t_max, opt.grid_points);
    tr = squeezing_trace(prop, basis, moments, grid);
    k_min = static_cast<std::size_t>(std::min_element(tr.xi_squared.begin(), tr.xi_squared.end()) - tr.xi_squared.begin());
    const bool at_boundary = k_min >= static_cast<std::size_t>((1.0 - opt.boundary_fraction) * (opt.grid_points - 1));
    if (!at_boundary) break;
    if (opt.auto_extend && !extended) {
      extended = true;
      t_max *= 2.0;
      continue;
    }
    tr.flags.emplace_back(flags::kMinimumAtBoundary);
    break;
  }
  if (extended) tr.flags.emplace_back(flags::kWindowExtended);

  double dev = 0.0;
  for (double x : tr.xi_squared) dev = std::max(dev, std::abs(x - 1.0));
  if (dev < opt.no_squeezing_tolerance) {
    tr.flags.emplace_back(flags::kNoSqueezing);
    tr.summary = {tr.xi_squared.front(), 0.0};
    return tr;
  }

  double best_t = tr.times[k_min];
  double best_x = tr.xi_squared[k_min];
  if (k_min > 0) {
    const double lo = tr.times[k_min - 1];
    const double hi = tr.times[std::min(k_min + 1, tr.times.size() - 1)];
    auto f = [&](double t) { return squeezing_sample(moments(prop.state_at(t), basis)).xi_squared; };
    const int bits = static_cast<int>(std::ceil(1.0 - std::log2(opt.relative_tolerance)));
    std::uintmax_t max_iter = 200;
    const auto [t_ref, x_ref] = boost::math::tools::brent_find_minima(f, lo, hi, bits, max_iter);
    if (x_ref < best_x) {
      best_x = x_ref;
      best_t = t_ref;
    }
  }
  tr.summary = {best_x, best_t};
  return tr;
}

inline SqueezingTrace find_max_squeezing(const Matrix& hamiltonian, const QuantumState& initial,
                                         const SpinOperatorSet& ops, const SearchOptions& opt,
                                         std::span<const int> sectors = {}) {
  const Propagator prop(to_sparse(hamiltonian), initial.amplitudes(), EvolutionMethod::automatic, sectors);
  return find_max_squeezing(prop, initial.basis(), ops, opt);
}

}  // namespace twoaxis
