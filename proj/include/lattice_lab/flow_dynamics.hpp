#pragma once

// Diagonal flows f_t = diag(e^{a_1 t}, ..., e^{a_k t}) on the space of
// unimodular lattices, the lattice L_A of an m x n matrix, and the (ED)
// exponential-sum diagnostic.

#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lattice_lab/errors.hpp"
#include "lattice_lab/lattice_core.hpp"

namespace lattice_lab {

inline constexpr double kFlowExponentGuard = 500.0;

class DiagonalFlow {
 public:
  static constexpr double kTraceTolerance = 1e-12;

  explicit DiagonalFlow(Vector exponents) : exponents_(std::move(exponents)) {
    if (exponents_.size() < 2 || exponents_.size() > kMaxDim) throw ValidationError("flow dimension must be in [2, 6]");
    if (!(std::abs(exponents_.sum()) <= kTraceTolerance)) throw ValidationError("flow exponents must sum to zero");
  }

  /// f_t = diag(e^{t/m} (m times), e^{-t/n} (n times)).
  static DiagonalFlow split(int m, int n) {
    if (m < 1 || n < 1 || m + n > kMaxDim) throw ValidationError("flow split m:n needs m, n >= 1 and m + n <= 6");
    Vector a(m + n);
    for (int i = 0; i < m; ++i) a(i) = 1.0 / m;
    for (int i = 0; i < n; ++i) a(m + i) = -1.0 / n;
    // Absorb rounding so the trace is exactly representable as zero.
    a(m + n - 1) -= a.sum();
    return DiagonalFlow(std::move(a));
  }

  /// Parses the "m:n" shorthand.
  static DiagonalFlow parse_split(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw ValidationError("flow spec must look like m:n, got '" + spec + "'");
    try {
      return split(std::stoi(spec.substr(0, colon)), std::stoi(spec.substr(colon + 1)));
    } catch (const std::logic_error&) {
      throw ValidationError("flow spec must look like m:n, got '" + spec + "'");
    }
  }

  int dim() const { return static_cast<int>(exponents_.size()); }
  const Vector& exponents() const { return exponents_; }

  DiagonalFlow scaled(double factor) const {
    Vector a = exponents_ * factor;
    a(a.size() - 1) -= a.sum();
    return DiagonalFlow(std::move(a));
  }

 private:
  Vector exponents_;
};

/// Trace-zero exponent vector t for the multi-parameter flow exp(t).
class ChamberPoint {
 public:
  explicit ChamberPoint(Vector t) : t_(std::move(t)) {
    if (t_.size() < 2 || t_.size() > kMaxDim) throw ValidationError("chamber point dimension must be in [2, 6]");
    if (!(std::abs(t_.sum()) <= DiagonalFlow::kTraceTolerance * std::max(1.0, t_.cwiseAbs().maxCoeff()))) {
      throw ValidationError("chamber point must have zero trace");
    }
  }

  const Vector& coords() const { return t_; }
  int dim() const { return static_cast<int>(t_.size()); }

  /// |t|_- = max{|t_i| : t_i <= 0}.
  double minus_norm() const {
    double out = 0.0;
    for (Eigen::Index i = 0; i < t_.size(); ++i)
      if (t_(i) <= 0.0) out = std::max(out, -t_(i));
    return out;
  }

  ChamberPoint operator+(const ChamberPoint& o) const { return ChamberPoint(t_ + o.t_); }

 private:
  Vector t_;
};

namespace detail {

inline LatticeBasis scale_rows(const Vector& log_scale, const LatticeBasis& b) {
  if (log_scale.size() != b.dim()) throw ValidationError("flow and lattice dimensions differ");
  if (log_scale.cwiseAbs().maxCoeff() > kFlowExponentGuard) {
    throw OverflowGuardError("flow exponent exceeds overflow guard of 500");
  }
  Matrix m = log_scale.array().exp().matrix().asDiagonal() * b.cols();
  return LatticeBasis(std::move(m));
}

}  // namespace detail

/// f_t B: row i of B scaled by e^{a_i t}.
inline LatticeBasis apply_flow(const DiagonalFlow& flow, double t, const LatticeBasis& b) {
  return detail::scale_rows(flow.exponents() * t, b);
}

/// exp(t) B for a chamber point t.
inline LatticeBasis apply_multiflow(const ChamberPoint& t, const LatticeBasis& b) {
  return detail::scale_rows(t.coords(), b);
}

/// Basis [[I_m, A], [0, I_n]] of L_A = {(Aq + p, q)}.
inline LatticeBasis lattice_of_matrix(const Matrix& a) {
  const auto m = a.rows();
  const auto n = a.cols();
  if (m < 1 || n < 1 || m + n > kMaxDim) throw ValidationError("lattice_of_matrix needs m, n >= 1 and m + n <= 6");
  Matrix b = Matrix::Identity(m + n, m + n);
  b.topRightCorner(m, n) = a;
  return LatticeBasis(std::move(b));
}

/// A reduced representative of f_t L, advanced one step at a time.
///
/// Long orbits are followed incrementally (flow by dt, then LLL) so entries
/// stay O(1). Past a few dozen unit steps the floating-point orbit is a
/// pseudo-orbit of the exact one, which is what statistical experiments use.
class OrbitWalker {
 public:
  OrbitWalker(DiagonalFlow flow, const LatticeBasis& start)
      : flow_(std::move(flow)), current_(reduce_basis(start).basis) {}

  const LatticeBasis& lattice() const { return current_; }
  double time() const { return time_; }

  void advance(double dt) {
    double remaining = dt;
    while (remaining > 0.0) {
      const double step = std::min(remaining, 1.0);
      current_ = LatticeBasis(reduce_basis(renormalize(apply_flow(flow_, step, current_))).basis);
      remaining -= step;
    }
    time_ += dt;
  }

 private:
  // Rescales away drift of det from 1 accumulated over many steps.
  static LatticeBasis renormalize(const LatticeBasis& b) {
    const double det = b.cols().determinant();
    return LatticeBasis(b.cols() / std::pow(det, 1.0 / b.dim()));
  }

  DiagonalFlow flow_;
  LatticeBasis current_;
  double time_ = 0.0;
};

/// max over t <= T of sum_{s <= T} exp(-beta |f_s f_t^{-1}|), with |diag(e^d)|
/// taken as the Euclidean norm of d.
inline double ed_sum(const DiagonalFlow& flow, double beta, long horizon) {
  if (!(beta > 0.0)) throw DomainError("ed_sum requires beta > 0");
  if (horizon < 1) throw DomainError("ed_sum requires T >= 1");
  const double speed = flow.exponents().norm();
  double best = 0.0;
  for (long t = 1; t <= horizon; ++t) {
    double acc = 0.0;
    for (long s = 1; s <= horizon; ++s) acc += std::exp(-beta * speed * static_cast<double>(std::labs(s - t)));
    best = std::max(best, acc);
  }
  return best;
}

}  // namespace lattice_lab
