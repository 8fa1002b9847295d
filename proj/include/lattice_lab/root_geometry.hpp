#pragma once

// Type A_{n-1} root data on the trace-zero hyperplane of R^n, the exponent
// k = min_i k_i / |omega_i| of the distance function, and the Weyl-chamber
// integral J(z) = int_{w in a+, |w| >= z} exp(-rho(w)) dw.
//
// Roots act on a by dot product (alpha_ij(w) = w_i - w_j). The inner product
// on a is c_n times the standard one, c_n = (n^2 - n + 2)/n, which makes
// |omega_1|^2 = 1 at n = 2 and 16/9 at n = 3.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "lattice_lab/errors.hpp"

namespace lattice_lab {

struct RootSystemA {
  static constexpr int kMaxN = 8;

  int n = 0;
  double scale = 0.0;                       // Gram = scale * I_n on the trace-zero plane
  Eigen::MatrixXd gram;                     // (n-1) x (n-1), <omega_i, omega_j>
  std::vector<Eigen::VectorXd> simple_roots;
  std::vector<Eigen::VectorXd> positive_roots;
  std::vector<Eigen::VectorXd> weights;     // fundamental weights omega_i
  std::vector<double> k;                    // rho = sum k_i alpha_i, k_i = i(n-i)/2
  Eigen::VectorXd rho;

  explicit RootSystemA(int n_) : n(n_) {
    if (n < 2 || n > kMaxN) throw DomainError("RootSystemA: need 2 <= n <= 8");
    scale = static_cast<double>(n * n - n + 2) / n;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
        a(i) = 1.0;
        a(j) = -1.0;
        positive_roots.push_back(a);
        if (j == i + 1) simple_roots.push_back(a);
      }
    rho = Eigen::VectorXd::Zero(n);
    for (int i = 1; i < n; ++i) {
      Eigen::VectorXd w = Eigen::VectorXd::Constant(n, -static_cast<double>(i) / n);
      w.head(i).array() += 1.0;
      weights.push_back(w);
      k.push_back(i * (n - i) / 2.0);
      rho += k.back() * simple_roots[static_cast<std::size_t>(i - 1)];
    }
    gram.resize(n - 1, n - 1);
    for (int i = 0; i < n - 1; ++i)
      for (int j = 0; j < n - 1; ++j) gram(i, j) = inner(weights[i], weights[j]);
  }

  double inner(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const { return scale * x.dot(y); }
  double norm(const Eigen::VectorXd& x) const { return std::sqrt(inner(x, x)); }
  double rho_of(const Eigen::VectorXd& w) const { return rho.dot(w); }

  /// Half the sum of the positive roots, for cross-checking rho.
  Eigen::VectorXd half_sum_positive() const {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
    for (const auto& a : positive_roots) s += a;
    return 0.5 * s;
  }
};

inline double weight_norm_sq(int n, int i) {
  if (n < 2 || i < 1 || i > n - 1) throw DomainError("weight_norm_sq: need 1 <= i <= n-1");
  const double j = static_cast<double>(i) * (n - i);
  return j / (static_cast<double>(n) * n) * (n * (n + 1.0) - 2.0 * j);
}

inline double weight_norm_sq_gram(int n, int i) {
  const RootSystemA rs(n);
  if (i < 1 || i > n - 1) throw DomainError("weight_norm_sq_gram: need 1 <= i <= n-1");
  return rs.gram(i - 1, i - 1);
}

inline double dl_exponent_closed_form(int n) {
  return n / 2.0 * std::sqrt((n - 1.0) / (static_cast<double>(n) * n - n + 2.0));
}

/// min_i k_i / |omega_i|, checked against the closed form and the location of the minimum.
inline double dl_exponent(int n) {
  if (n < 2) throw DomainError("dl_exponent: need n >= 2");
  double best = INFINITY;
  int arg = 0;
  for (int i = 1; i <= n - 1; ++i) {
    const double v = i * (n - i) / 2.0 / std::sqrt(weight_norm_sq(n, i));
    if (v < best - 1e-15) {
      best = v;
      arg = i;
    }
  }
  if (std::abs(best - dl_exponent_closed_form(n)) > 1e-12) detail::invariant_failure("dl_exponent closed form");
  if (arg != 1 && arg != n - 1) detail::invariant_failure("dl_exponent minimum away from i = 1, n-1");
  return best;
}

struct RootTableRow {
  int i = 0;
  double k_i = 0.0;
  double weight_norm_sq = 0.0;
  double ratio = 0.0;  // k_i / |omega_i|
};

inline std::vector<RootTableRow> roots_table(int n) {
  if (n < 2) throw DomainError("roots_table: need n >= 2");
  std::vector<RootTableRow> rows;
  for (int i = 1; i <= n - 1; ++i) {
    const double w = weight_norm_sq(n, i);
    rows.push_back({i, i * (n - i) / 2.0, w, i * (n - i) / 2.0 / std::sqrt(w)});
  }
  return rows;
}

namespace detail {

// int_z^inf r^(d-1) exp(-g r) dr = exp(-g z) int_0^inf (z + s)^(d-1) exp(-g s) ds; the
// s integral is truncated where its integrand (relative to z^(d-1)) drops below 1e-16.
inline double radial_tail(double g, double z, int d) {
  const double lead = std::pow(std::max(z, 1.0), d - 1);
  const auto f = [&](double s) { return std::pow(z + s, d - 1) / lead * std::exp(-g * s); };
  double end = (d - 1) / g + 1.0 / g;
  while (f(end) >= 1e-16) end += 2.0 / g;
  double err = 0.0;
  const double inner = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, end, 20, 1e-10, &err);
  return std::exp(-g * z) * lead * inner;
}

}  // namespace detail

/// J(z) for rank <= 2 (n in {2, 3}), relative tolerance 1e-6.
inline double chamber_tail_integral(int n, double z) {
  if (n < 2 || n > 3) throw DomainError("chamber_tail_integral: unsupported rank (n must be 2 or 3)");
  if (!(z >= 0.0)) throw DomainError("chamber_tail_integral: need z >= 0");
  const RootSystemA rs(n);
  const auto& w1 = rs.weights[0];
  if (n == 2) return detail::radial_tail(rs.rho_of(w1) / rs.norm(w1), z, 1);

  // Polar coordinates: e1 along omega_1, e2 its orthogonal complement towards omega_2.
  const auto& w2 = rs.weights[1];
  const Eigen::VectorXd e1 = w1 / rs.norm(w1);
  Eigen::VectorXd e2 = w2 - rs.inner(w2, e1) * e1;
  e2 /= rs.norm(e2);
  const double opening = std::acos(rs.inner(w1, w2) / (rs.norm(w1) * rs.norm(w2)));
  const double r1 = rs.rho_of(e1), r2 = rs.rho_of(e2);
  const auto angular = [&](double theta) {
    return detail::radial_tail(r1 * std::cos(theta) + r2 * std::sin(theta), z, 2);
  };
  double err = 0.0;
  const double j = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(angular, 0.0, opening, 15, 1e-9, &err);
  if (!(err <= 1e-6 * j)) throw QuadratureError("chamber_tail_integral missed relative tolerance 1e-6");
  return j;
}

}  // namespace lattice_lab
