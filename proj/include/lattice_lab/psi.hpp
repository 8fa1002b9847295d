#pragma once

// Approximation functions psi: [x0, inf) -> (0, inf), non-increasing.
//
// Everything downstream works in logarithmic coordinates, lambda = log x and
// P(lambda) = -log psi(e^lambda), so psi is stored and evaluated that way.

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lattice_lab/errors.hpp"

namespace lattice_lab {

namespace detail {

/// Splits "name:k1=v1,k2=v2" into the name and a key -> number map.
inline std::pair<std::string, std::map<std::string, double>> parse_family_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  std::string name = spec.substr(0, colon);
  std::map<std::string, double> params;
  if (colon == std::string::npos) return {name, params};
  std::stringstream rest(spec.substr(colon + 1));
  std::string item;
  while (std::getline(rest, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ValidationError("expected key=value in '" + spec + "', got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const std::string val = item.substr(eq + 1);
    double x = 0.0;
    if (val == "e") {
      x = std::exp(1.0);
    } else {
      std::size_t used = 0;
      try {
        x = std::stod(val, &used);
      } catch (const std::logic_error&) {
        used = 0;
      }
      if (used != val.size() || val.empty()) throw ValidationError("bad number '" + val + "' in '" + spec + "'");
    }
    params[key] = x;
  }
  return {name, params};
}

inline double take_param(std::map<std::string, double>& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  if (it == params.end()) return fallback;
  const double v = it->second;
  params.erase(it);
  return v;
}

inline void reject_leftover(const std::map<std::string, double>& params, const std::string& spec) {
  if (!params.empty()) throw ValidationError("unknown parameter '" + params.begin()->first + "' in '" + spec + "'");
}

}  // namespace detail

class PsiFunction {
 public:
  enum class Family { power_log, tabulated };

  static constexpr int kMonotoneGridPoints = 1000;

  /// psi(x) = c x^{-a} (log x)^{-q} on [x0, inf).
  static PsiFunction power_log(double c, double a, double q, double x0) {
    if (!(c > 0.0) || !std::isfinite(c)) throw ValidationError("power_log needs c > 0");
    if (!(a >= 0.0) || !std::isfinite(a)) throw ValidationError("power_log needs a >= 0");
    if (!std::isfinite(q)) throw ValidationError("power_log needs finite q");
    if (!(x0 > 0.0) || !std::isfinite(x0)) throw ValidationError("power_log needs x0 > 0");
    if (q != 0.0 && !(x0 > 1.0)) throw ValidationError("power_log with q != 0 needs x0 > 1");
    PsiFunction f;
    f.family_ = Family::power_log;
    f.c_ = c;
    f.a_ = a;
    f.q_ = q;
    f.lambda0_ = std::log(x0);
    f.check_monotone();
    // The grid only covers a window; for q < 0 the tail is non-increasing
    // iff a > 0 (slope a + q/lambda of P stays >= 0 once it is).
    if (q < 0.0 && a == 0.0) throw ValidationError("psi must be non-increasing (a = 0 with q < 0 increases)");
    return f;
  }

  /// Samples of P at increasing lambda; interpolated linearly in (lambda, P) and
  /// extrapolated past the last sample with the last slope.
  static PsiFunction tabulated(std::vector<double> lambda, std::vector<double> p) {
    if (lambda.size() != p.size() || lambda.size() < 2) throw ValidationError("tabulated psi needs >= 2 matching samples");
    for (std::size_t i = 0; i < lambda.size(); ++i) {
      if (!std::isfinite(lambda[i]) || !std::isfinite(p[i])) throw ValidationError("tabulated psi samples must be finite");
      if (i > 0 && !(lambda[i] > lambda[i - 1])) throw ValidationError("tabulated psi abscissae must increase");
      if (i > 0 && p[i] < p[i - 1]) throw ValidationError("psi must be non-increasing");
    }
    PsiFunction f;
    f.family_ = Family::tabulated;
    f.lambda0_ = lambda.front();
    f.lam_ = std::move(lambda);
    f.p_ = std::move(p);
    return f;
  }

  /// Parses "power_log:c=1,a=1,q=2,x0=2" (defaults c=1, a=1, q=0, x0=1; x0=e allowed).
  static PsiFunction parse(const std::string& spec) {
    auto [name, params] = detail::parse_family_spec(spec);
    if (name != "power_log") throw ValidationError("unknown psi family '" + name + "' (supported: power_log)");
    const double c = detail::take_param(params, "c", 1.0);
    const double a = detail::take_param(params, "a", 1.0);
    const double q = detail::take_param(params, "q", 0.0);
    const double x0 = detail::take_param(params, "x0", 1.0);
    detail::reject_leftover(params, spec);
    return power_log(c, a, q, x0);
  }

  Family family() const { return family_; }
  double x0() const { return std::exp(lambda0_); }
  double lambda0() const { return lambda0_; }

  /// P(lambda) = -log psi(e^lambda), lambda >= lambda0.
  double neg_log(double lambda) const {
    if (lambda < lambda0_ - 1e-12 * std::max(1.0, std::abs(lambda0_))) throw DomainError("psi evaluated below x0");
    lambda = std::max(lambda, lambda0_);
    if (family_ == Family::power_log) {
      double out = a_ * lambda - std::log(c_);
      if (q_ != 0.0) out += q_ * std::log(lambda);
      return out;
    }
    const auto it = std::upper_bound(lam_.begin(), lam_.end(), lambda);
    std::size_t hi = static_cast<std::size_t>(it - lam_.begin());
    if (hi == 0) hi = 1;
    if (hi >= lam_.size()) hi = lam_.size() - 1;
    const std::size_t lo = hi - 1;
    const double w = (lambda - lam_[lo]) / (lam_[hi] - lam_[lo]);
    return p_[lo] + w * (p_[hi] - p_[lo]);
  }

  double operator()(double x) const {
    if (!(x > 0.0)) throw DomainError("psi evaluated at non-positive x");
    return std::exp(-neg_log(std::log(x)));
  }

  /// True when x lies beyond the last tabulated sample.
  bool is_extrapolated(double x) const { return family_ == Family::tabulated && std::log(x) > lam_.back(); }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    if (family_ == Family::power_log) {
      os << "power_log:c=" << c_ << ",a=" << a_ << ",q=" << q_ << ",x0=" << x0();
    } else {
      os << "tabulated:samples=" << lam_.size() << ",x0=" << x0();
    }
    return os.str();
  }

 private:
  PsiFunction() = default;

  void check_monotone() const {
    // 10^3 lambda points spread geometrically over [lambda0, lambda0 + 10^4].
    double prev = neg_log(lambda0_);
    if (!std::isfinite(prev)) throw ValidationError("psi must be finite and positive at x0");
    for (int i = 1; i < kMonotoneGridPoints; ++i) {
      const double lam = lambda0_ + std::expm1(std::log1p(1e4) * i / (kMonotoneGridPoints - 1));
      const double cur = neg_log(lam);
      if (!std::isfinite(cur)) throw ValidationError("psi must be finite and positive on its domain");
      if (cur < prev - 1e-12 * std::max(1.0, std::abs(prev))) throw ValidationError("psi must be non-increasing");
      prev = cur;
    }
  }

  Family family_ = Family::power_log;
  double c_ = 1.0, a_ = 1.0, q_ = 0.0;
  double lambda0_ = 0.0;
  std::vector<double> lam_, p_;
};

}  // namespace lattice_lab
