#pragma once

// The change of variables between approximation functions psi and rate
// functions r for the flow diag(e^{t/m} (m times), e^{-t/n} (n times)):
//
//   psi(e^{t - n r(t)}) = e^{-t - m r(t)},
//
// i.e. with lambda(t) = t - n r(t) and L(t) = t + m r(t), the curve
// (lambda, L) is the graph of P(lambda) = -log psi(e^lambda).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "lattice_lab/errors.hpp"
#include "lattice_lab/psi.hpp"

namespace lattice_lab {

class RateFunction {
 public:
  using Evaluator = std::function<double(double)>;

  RateFunction(Evaluator r, double t0, int m, int n, double quasi_constant, std::string label)
      : r_(std::move(r)), t0_(t0), m_(m), n_(n), c_(quasi_constant), label_(std::move(label)) {
    if (m < 1 || n < 1) throw ValidationError("rate function needs m, n >= 1");
    if (!std::isfinite(t0)) throw ValidationError("rate function needs a finite t0");
  }

  static RateFunction constant(double value, int m, int n, double t0 = 0.0) {
    return RateFunction([value](double) { return value; }, t0, m, n, default_quasi_constant(m),
                        "const:v=" + format(value));
  }

  /// r(t) = c log t for t >= t0 (t0 >= 1).
  static RateFunction logarithmic(double c, int m, int n, double t0 = 1.0) {
    if (!(t0 >= 1.0)) throw ValidationError("log rate needs t0 >= 1");
    return RateFunction([c](double t) { return c * std::log(t); }, t0, m, n, default_quasi_constant(m),
                        "log:c=" + format(c));
  }

  static RateFunction linear(double slope, int m, int n, double t0 = 0.0) {
    return RateFunction([slope](double t) { return slope * t; }, t0, m, n, default_quasi_constant(m),
                        "linear:s=" + format(slope));
  }

  /// The constant implied by L non-decreasing: r(t2) >= r(t1) - (t2 - t1)/m.
  static double default_quasi_constant(int m) { return 1.0 / m + 1e-9; }

  double t0() const { return t0_; }
  int m() const { return m_; }
  int n() const { return n_; }
  double quasi_constant() const { return c_; }
  const std::string& describe() const { return label_; }

  /// The psi this rate was transformed from, if any.
  const PsiFunction* source() const { return source_.get(); }

  double operator()(double t) const {
    if (t < t0_ - 1e-12 * std::max(1.0, std::abs(t0_))) throw DomainError("rate function evaluated below t0");
    return r_(std::max(t, t0_));
  }
  double lambda(double t) const { return t - n_ * (*this)(t); }
  double big_l(double t) const { return t + m_ * (*this)(t); }

  /// Checks lambda strictly increasing and L non-decreasing on a sorted grid.
  void validate(const std::vector<double>& grid) const {
    for (std::size_t i = 1; i < grid.size(); ++i) {
      if (!(lambda(grid[i]) > lambda(grid[i - 1]))) throw ValidationError("t - n r(t) must be strictly increasing");
      const double l0 = big_l(grid[i - 1]);
      if (big_l(grid[i]) < l0 - 1e-12 * std::max(1.0, std::abs(l0))) {
        throw ValidationError("t + m r(t) must be non-decreasing");
      }
    }
  }

  void require_split(int m, int n) const {
    if (m != m_ || n != n_) throw ValidationError("rate function was built for a different m:n split");
  }

 private:
  friend RateFunction dani_forward(const PsiFunction& psi, int m, int n);

  static std::string format(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
  }

  Evaluator r_;
  double t0_;
  int m_, n_;
  double c_;
  std::string label_;
  std::shared_ptr<const PsiFunction> source_;
};

namespace detail {

/// Root of F(lambda) = P(lambda) + (m/n) lambda - ((m+n)/n) t, increasing in lambda.
inline double solve_lambda(const PsiFunction& psi, int m, int n, double t) {
  const double mn = static_cast<double>(m) / n;
  const double slope_t = static_cast<double>(m + n) / n;
  const auto f = [&](double lam) { return psi.neg_log(lam) + mn * lam - slope_t * t; };
  double lo = psi.lambda0();
  const double f_lo = f(lo);
  if (f_lo > 0.0) {
    if (f_lo <= 1e-12 * std::max(1.0, std::abs(slope_t * t))) return lo;
    throw DomainError("t below t0 of the transformed rate function");
  }
  double step = 1.0;
  double hi = lo + step;
  while (f(hi) <= 0.0) {
    lo = hi;
    step *= 2.0;
    hi = lo + step;
    if (!std::isfinite(hi)) detail::invariant_failure("bisection bracket diverged");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) <= 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// psi -> r. Each evaluation solves for lambda by bisection.
inline RateFunction dani_forward(const PsiFunction& psi, int m, int n) {
  if (m < 1 || n < 1) throw ValidationError("dani_forward needs m, n >= 1");
  auto src = std::make_shared<const PsiFunction>(psi);
  const double lam0 = psi.lambda0();
  const double t0 = (m * lam0 + n * psi.neg_log(lam0)) / (m + n);
  RateFunction out(
      [src, m, n](double t) {
        const double lam = detail::solve_lambda(*src, m, n, t);
        return (src->neg_log(lam) - lam) / (m + n);
      },
      t0, m, n, RateFunction::default_quasi_constant(m), "psi:" + psi.describe());
  out.source_ = std::move(src);
  return out;
}

/// |P(lambda(t)) - L(t)|: how far (t, r(t)) is from satisfying the correspondence.
inline double dani_residual(const PsiFunction& psi, const RateFunction& r, double t) {
  return std::abs(psi.neg_log(r.lambda(t)) - r.big_l(t));
}

struct InverseGrid {
  double horizon = 64.0;  // tabulate t in [t0, t0 + horizon]
  double step = 1e-3;
};

/// r -> tabulated psi on [e^{lambda(t0)}, inf); the tail past the grid is extrapolated.
inline PsiFunction dani_inverse(const RateFunction& r, int m, int n, InverseGrid grid = {}) {
  r.require_split(m, n);
  if (!(grid.horizon > 0.0) || !(grid.step > 0.0)) throw ValidationError("inverse grid needs positive horizon and step");
  const auto count = static_cast<std::size_t>(std::ceil(grid.horizon / grid.step));
  std::vector<double> ts(count + 1);
  for (std::size_t j = 0; j <= count; ++j) ts[j] = r.t0() + grid.step * static_cast<double>(j);
  r.validate(ts);
  std::vector<double> lam(ts.size()), p(ts.size());
  for (std::size_t j = 0; j < ts.size(); ++j) {
    const double rv = r(ts[j]);
    lam[j] = ts[j] - n * rv;
    p[j] = ts[j] + m * rv;
  }
  // Clip rounding-level decreases so the table stays monotone.
  for (std::size_t j = 1; j < p.size(); ++j) p[j] = std::max(p[j], p[j - 1]);
  return PsiFunction::tabulated(std::move(lam), std::move(p));
}

namespace detail {

inline constexpr double kProbeTolerance = 1e-8;

/// Adaptive Gauss-Kronrod over [a, b], cut into geometrically growing pieces so
/// very long ranges stay cheap.
template <class F>
double integrate_long(F f, double a, double b) {
  if (!(b > a)) return 0.0;
  double total = 0.0, total_err = 0.0;
  double start = a, width = 1.0;
  while (start < b) {
    const double end = std::min(b, start + width);
    double err = 0.0;
    const double piece =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, start, end, 20, 1e-11, &err);
    if (!std::isfinite(piece)) throw QuadratureError("integrand is not finite");
    total += piece;
    total_err += err;
    start = end;
    width *= 2.0;
  }
  if (total_err > kProbeTolerance * std::abs(total) + 1e-300) {
    throw QuadratureError("quadrature missed relative tolerance 1e-8");
  }
  return total;
}

inline double int_pow(double x, int q) {
  double out = 1.0;
  for (int i = 0; i < q; ++i) out *= x;
  return out;
}

}  // namespace detail

/// I1 = int_{x0}^{X} (log x)^q psi(x) dx, given log X (so X may exceed double range).
inline double integral_probe_log(const PsiFunction& psi, int q, double log_upper) {
  if (q < 0) throw DomainError("integral probe needs q >= 0");
  return detail::integrate_long(
      [&](double lam) { return detail::int_pow(lam, q) * std::exp(lam - psi.neg_log(lam)); }, psi.lambda0(),
      log_upper);
}

inline double integral_probe(const PsiFunction& psi, int q, double upper) {
  if (!(upper > 0.0)) throw DomainError("integral probe needs X > 0");
  return integral_probe_log(psi, q, std::log(upper));
}

/// I2 = int_{t0}^{T} t^q e^{-(m+n) r(t)} dt.
inline double rate_integral_probe(const RateFunction& r, int q, int m, int n, double upper) {
  if (q < 0) throw DomainError("integral probe needs q >= 0");
  r.require_split(m, n);
  return detail::integrate_long([&](double t) { return detail::int_pow(t, q) * std::exp(-(m + n) * r(t)); },
                                r.t0(), upper);
}

struct CauchyTail {
  double at_t = 0.0;
  double at_2t = 0.0;
  bool converged = false;
};

/// Heuristic convergence test: the tail over [T, 2T] is below 1e-6 of I(T).
template <class Integral>
CauchyTail cauchy_tail_check(Integral integral, double t) {
  CauchyTail out;
  out.at_t = integral(t);
  out.at_2t = integral(2.0 * t);
  out.converged = (out.at_2t - out.at_t) < 1e-6 * out.at_t;
  return out;
}

/// r(t2) > r(t1) - C for every grid pair with t1 <= t2 < t1 + 1.
inline bool quasi_increasing_check(const RateFunction& r, double c, const std::vector<double>& grid) {
  if (!std::is_sorted(grid.begin(), grid.end())) throw ValidationError("quasi_increasing_check needs a sorted grid");
  std::vector<double> vals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) vals[i] = r(grid[i]);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i; j < grid.size() && grid[j] < grid[i] + 1.0; ++j) {
      if (!(vals[j] > vals[i] - c)) return false;
    }
  }
  return true;
}

/// Parses "const:v=0", "log:c=0.5[,t0=1]", "linear:s=0.5[,t0=0]" or "psi:<psi spec>".
inline RateFunction parse_rate(const std::string& spec, int m, int n) {
  if (spec.rfind("psi:", 0) == 0) return dani_forward(PsiFunction::parse(spec.substr(4)), m, n);
  auto [name, params] = detail::parse_family_spec(spec);
  RateFunction out = [&]() {
    if (name == "const") {
      const double v = detail::take_param(params, "v", 0.0);
      return RateFunction::constant(v, m, n, detail::take_param(params, "t0", 0.0));
    }
    if (name == "log") {
      const double c = detail::take_param(params, "c", 1.0);
      return RateFunction::logarithmic(c, m, n, detail::take_param(params, "t0", 1.0));
    }
    if (name == "linear") {
      const double s = detail::take_param(params, "s", 0.0);
      return RateFunction::linear(s, m, n, detail::take_param(params, "t0", 0.0));
    }
    throw ValidationError("unknown rate family '" + name + "' (supported: const, log, linear, psi:<spec>)");
  }();
  detail::reject_leftover(params, spec);
  return out;
}

}  // namespace lattice_lab
