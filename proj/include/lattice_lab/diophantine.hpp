#pragma once

// psi-approximation witnesses (matrix, lattice and multiplicative forms) and
// the maps between witnesses and excursion times of the diagonal flow.
// All norms here are sup norms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <set>
#include <vector>

#include "lattice_lab/dani_transform.hpp"
#include "lattice_lab/errors.hpp"
#include "lattice_lab/flow_dynamics.hpp"
#include "lattice_lab/lattice_core.hpp"
#include "lattice_lab/psi.hpp"

namespace lattice_lab {

/// Allowed shortfall of Delta below r(t) when checking an excursion.
inline constexpr double kExcursionTolerance = 1e-9;

/// |Aq + p|^m <= psi(|q|^n) with p the nearest integer vector to -Aq.
struct RationalWitness {
  IntVector p;
  IntVector q;
  double q_norm = 0.0;
  double residual_norm = 0.0;  // |Aq + p|
  double slack = 0.0;
};

struct ApproxWitness {
  ShortVec v;
  double upper_norm = 0.0;  // |v^(m)|, first m coordinates
  double lower_norm = 0.0;  // |v_(n)|, last n coordinates
  double slack = 0.0;
  bool upper_zero = false;  // v^(m) = 0: the lattice is approximable for every psi
};

struct MAWitness {
  ShortVec v;
  double product = 0.0;  // prod |v_i|
  double slack = 0.0;
  bool has_zero = false;  // some v_i = 0
};

namespace detail {

inline double sup_head(const Vector& v, int m) { return v.head(m).cwiseAbs().maxCoeff(); }
inline double sup_tail(const Vector& v, int n) { return v.tail(n).cwiseAbs().maxCoeff(); }

inline double abs_product(const Vector& v) {
  double out = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) out *= std::abs(v(i));
  return out;
}

inline bool coords_less(const IntVector& a, const IntVector& b) { return lex_less(a, b); }

/// Smallest t >= t0 with lambda(t) = target (lambda strictly increasing).
inline double solve_time(const RateFunction& r, double target) {
  double lo = r.t0();
  if (r.lambda(lo) > target + 1e-12 * std::max(1.0, std::abs(target))) {
    throw NotInRangeError("excursion not yet defined: target below lambda(t0)");
  }
  if (r.lambda(lo) >= target) return lo;
  double step = 1.0;
  double hi = lo + step;
  int grow = 0;
  while (r.lambda(hi) < target) {
    lo = hi;
    step *= 2.0;
    hi = lo + step;
    if (++grow > 2000 || !std::isfinite(hi)) throw NotInRangeError("lambda(t) never reaches the target");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (r.lambda(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Rounding in v = B c: entries carry absolute error about eps |v| k, which
/// dominates |v^(m)|^m once |v^(m)| is tiny next to |v|.
inline double embed_tolerance(const Vector& v, double upper, int m) {
  const double abs_err = 8.0 * std::numeric_limits<double>::epsilon() * v.size() * v.cwiseAbs().maxCoeff();
  return 1e-9 * std::pow(upper, m) + m * std::pow(upper + abs_err, m - 1) * abs_err;
}

inline double product_tolerance(const Vector& v) {
  const double abs_err = 8.0 * std::numeric_limits<double>::epsilon() * v.size() * v.cwiseAbs().maxCoeff();
  double out = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    double others = 1.0;
    for (Eigen::Index j = 0; j < v.size(); ++j)
      if (j != i) others *= std::abs(v(j)) + abs_err;
    out += others * abs_err;
  }
  return out;
}

inline std::vector<IntVector> unique_coords(std::vector<IntVector> all) {
  std::sort(all.begin(), all.end(), coords_less);
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

}  // namespace detail

/// All q with 1 <= |q| <= Qmax, first nonzero coordinate positive, and
/// |q|^n >= x0, for which the nearest p gives |Aq + p|^m <= psi(|q|^n).
/// Sorted by |q| then q.
inline std::vector<RationalWitness> psi_approx_witnesses(const Matrix& a, const PsiFunction& psi, double qmax,
                                                         std::size_t cap = kDefaultEnumerationCap) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  if (m < 1 || n < 1 || m + n > kMaxDim) throw ValidationError("psi_approx_witnesses needs m, n >= 1 and m + n <= 6");
  if (!(qmax >= 1.0)) throw DomainError("psi_approx_witnesses needs Qmax >= 1");
  const auto box = static_cast<std::int64_t>(std::floor(qmax));
  const double cells = std::pow(2.0 * static_cast<double>(box) + 1.0, n) / 2.0;
  if (cells > static_cast<double>(cap)) throw EnumerationLimitError("q-box exceeds enumeration cap");

  std::vector<RationalWitness> out;
  IntVector q = IntVector::Constant(n, -box);
  for (;;) {
    if (q.any() && detail::canonical_sign(q) == q) {
      const double qn = static_cast<double>(q.cwiseAbs().maxCoeff());
      const double arg = std::pow(qn, n);
      if (arg >= psi.x0()) {
        const Vector aq = a * q.cast<double>();
        IntVector p(m);
        for (int i = 0; i < m; ++i) p(i) = static_cast<std::int64_t>(std::nearbyint(-aq(i)));
        const double res = (aq + p.cast<double>()).cwiseAbs().maxCoeff();
        const double bound = psi(arg);
        const double lhs = std::pow(res, m);
        if (lhs <= bound) out.push_back({p, q, qn, res, bound - lhs});
      }
    }
    int i = n - 1;
    while (i >= 0 && q(i) == box) {
      q(i) = -box;
      --i;
    }
    if (i < 0) break;
    ++q(i);
  }
  std::sort(out.begin(), out.end(), [](const RationalWitness& x, const RationalWitness& y) {
    if (x.q_norm != y.q_norm) return x.q_norm < y.q_norm;
    return detail::lex_less(x.q, y.q);
  });
  return out;
}

namespace detail {

inline ApproxWitness make_approx_witness(const LatticeBasis& b, IntVector c, int m, int n) {
  ApproxWitness w;
  w.v.embed = b.embed(c);
  w.v.coords = std::move(c);
  w.v.norm_value = w.v.embed.cwiseAbs().maxCoeff();
  w.upper_norm = sup_head(w.v.embed, m);
  w.lower_norm = sup_tail(w.v.embed, n);
  w.upper_zero = w.upper_norm == 0.0;
  return w;
}

}  // namespace detail

/// All v in the lattice with x0 <= |v_(n)|^n and |v_(n)| <= Rmax satisfying
/// |v^(m)|^m <= psi(|v_(n)|^n). Both signs; sorted by |v_(n)| then coordinates.
inline std::vector<ApproxWitness> lattice_psi_approx_witnesses(const LatticeBasis& b, const PsiFunction& psi, int m,
                                                               int n, double rmax,
                                                               std::size_t cap = kDefaultEnumerationCap) {
  if (m < 1 || n < 1 || m + n != b.dim()) throw ValidationError("lattice witnesses need m + n = dim(B)");
  const double lower_floor = std::pow(psi.x0(), 1.0 / n);
  std::vector<ApproxWitness> out;
  if (!(rmax >= lower_floor)) return out;
  // Shells s/2 < |v_(n)| <= s, halving s from Rmax until below the domain.
  std::vector<IntVector> found;
  for (double s = rmax; s >= lower_floor; s *= 0.5) {
    const double arg = std::max(psi.x0(), std::pow(0.5 * s, n));
    Vector half(m + n);
    half.head(m).setConstant(std::pow(psi(arg), 1.0 / m));
    half.tail(n).setConstant(s);
    for (auto& c : lattice_points_in_box(b.cols(), half, cap)) {
      const Vector v = b.embed(c);
      const double low = detail::sup_tail(v, n);
      if (!(low > 0.5 * s && low <= s)) continue;
      found.push_back(std::move(c));
    }
  }
  for (auto& c : detail::unique_coords(std::move(found))) {
    ApproxWitness w = detail::make_approx_witness(b, std::move(c), m, n);
    const double arg = std::pow(w.lower_norm, n);
    if (arg < psi.x0() || w.lower_norm > rmax) continue;
    const double lhs = std::pow(w.upper_norm, m);
    const double bound = psi(arg);
    if (lhs > bound) continue;
    w.slack = bound - lhs;
    out.push_back(std::move(w));
  }
  std::sort(out.begin(), out.end(), [](const ApproxWitness& x, const ApproxWitness& y) {
    if (x.lower_norm != y.lower_norm) return x.lower_norm < y.lower_norm;
    return detail::lex_less(x.v.coords, y.v.coords);
  });
  return out;
}

/// The t with |v_(n)|^n = e^{t - n r(t)}; checks that f_t v lies in the cube of
/// side e^{-r(t)}, so Delta(f_t L) >= r(t).
inline double witness_to_time(const ApproxWitness& w, const RateFunction& r, int m, int n) {
  r.require_split(m, n);
  if (!(w.lower_norm > 0.0)) throw NotInRangeError("excursion not yet defined: v_(n) = 0");
  const double t = detail::solve_time(r, n * std::log(w.lower_norm));
  const double cube = std::exp(-r(t));
  const double tol = 1.0 + 1e-9;
  if (std::exp(t / m) * w.upper_norm > cube * tol) {
    throw ValidationError("witness violates e^{t/m}|v^(m)| <= e^{-r(t)}: rate does not match its psi");
  }
  if (std::exp(-t / n) * w.lower_norm > cube * tol) detail::invariant_failure("e^{-t/n}|v_(n)| <= e^{-r(t)}");
  return t;
}

/// Undoes the flow on the shortest vector of f_t B, given Delta(f_t B) >= r(t).
inline ApproxWitness time_to_witness(const LatticeBasis& b, const RateFunction& r, int m, int n, double t) {
  r.require_split(m, n);
  if (m + n != b.dim()) throw ValidationError("time_to_witness needs m + n = dim(B)");
  const auto moved = apply_flow(DiagonalFlow::split(m, n), t, b);
  const auto sv = shortest_vector(moved);
  const double rt = r(t);
  if (-std::log(sv.norm_value) < rt - kExcursionTolerance) {
    throw NotInRangeError("no excursion at t: Delta(f_t B) < r(t)");
  }
  ApproxWitness w = detail::make_approx_witness(b, sv.coords, m, n);
  const double lhs = std::pow(w.upper_norm, m);
  const double chain = std::exp(-t - m * rt);
  const PsiFunction* psi = r.source();
  const double arg = std::pow(w.lower_norm, n);
  if (psi != nullptr && arg >= psi->x0()) {
    w.slack = (*psi)(arg) - lhs;
  } else {
    w.slack = chain - lhs;
  }
  if (w.slack < 0.0) {
    // Only rounding can push this below zero.
    if (w.slack < -detail::embed_tolerance(w.v.embed, w.upper_norm, m)) {
      detail::invariant_failure("time_to_witness slack < 0");
    }
    w.slack = 0.0;
  }
  return w;
}

/// All v with x0 <= |v| <= Rmax and prod |v_i| <= |v| psi(|v|). Both signs;
/// sorted by |v| then coordinates.
inline std::vector<MAWitness> ma_witnesses(const LatticeBasis& b, const PsiFunction& psi, double rmax,
                                           std::size_t cap = kDefaultEnumerationCap) {
  const int k = b.dim();
  std::vector<MAWitness> out;
  if (!(rmax >= psi.x0())) return out;
  std::vector<IntVector> found;
  std::size_t budget = cap;

  auto collect = [&](const Vector& half, double s) {
    for (auto& c : lattice_points_in_box(b.cols(), half, budget)) {
      const double nv = b.embed(c).cwiseAbs().maxCoeff();
      if (nv > 0.5 * s && nv <= s) found.push_back(std::move(c));
    }
    if (found.size() > cap) throw EnumerationLimitError("MA witness enumeration exceeded cap");
  };

  for (double s = rmax; s >= psi.x0(); s *= 0.5) {
    // In this shell prod |v_i| <= s psi(s/2); with |v_top| > s/2 the other
    // coordinates have product at most pi_bound, each at most s.
    const double pi_bound = 2.0 * psi(std::max(psi.x0(), 0.5 * s));
    for (int top = 0; top < k; ++top) {
      std::vector<int> rest;
      for (int i = 0; i < k; ++i)
        if (i != top) rest.push_back(i);
      Vector half = Vector::Constant(k, s);
      // Dyadic hyperbolic-cross cover of {y : |y_j| <= s, prod |y_j| <= pi_bound}.
      auto cover = [&](auto&& self, std::size_t depth, double prod_left) -> void {
        const int coord = rest[depth];
        const std::size_t remaining = rest.size() - depth - 1;
        if (remaining == 0) {
          half(coord) = std::min(s, prod_left);
          collect(half, s);
          return;
        }
        // Below this width the product constraint no longer binds.
        const double vacuous = prod_left / std::pow(s, static_cast<double>(remaining));
        double width = s;
        while (width > vacuous) {
          half(coord) = width;
          self(self, depth + 1, std::min(prod_left / (0.5 * width), std::pow(s, static_cast<double>(remaining))));
          width *= 0.5;
        }
        half(coord) = width;
        for (std::size_t j = depth + 1; j < rest.size(); ++j) half(rest[j]) = s;
        collect(half, s);
      };
      cover(cover, 0, pi_bound);
    }
  }

  for (auto& c : detail::unique_coords(std::move(found))) {
    MAWitness w;
    w.v.embed = b.embed(c);
    w.v.coords = std::move(c);
    w.v.norm_value = w.v.embed.cwiseAbs().maxCoeff();
    const double nv = w.v.norm_value;
    if (nv < psi.x0() || nv > rmax) continue;
    w.product = detail::abs_product(w.v.embed);
    w.has_zero = (w.v.embed.array() == 0.0).any();
    const double bound = nv * psi(nv);
    if (w.product > bound) continue;
    w.slack = bound - w.product;
    out.push_back(std::move(w));
  }
  std::sort(out.begin(), out.end(), [](const MAWitness& x, const MAWitness& y) {
    if (x.v.norm_value != y.v.norm_value) return x.v.norm_value < y.v.norm_value;
    return detail::lex_less(x.v.coords, y.v.coords);
  });
  return out;
}

struct ChamberResult {
  bool zero_coordinate = false;  // some v_i = 0; no chamber point is built
  double scalar_t = 0.0;
  Vector t;  // trace-zero, original coordinate order
};

/// Chamber point t with e^{t_i}|v_i| <= e^{-r(|t|_-)} for all i and |t|_- = the
/// scalar t solving |v| = e^{t - r(t)}. Needs r built for the (k-1):1 split.
inline ChamberResult ma_witness_to_chamber(const MAWitness& w, const RateFunction& r, int k) {
  r.require_split(k - 1, 1);
  const Vector& v = w.v.embed;
  if (v.size() != k) throw ValidationError("witness dimension differs from k");
  ChamberResult out;
  if ((v.array() == 0.0).any()) {
    out.zero_coordinate = true;
    return out;
  }
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return std::abs(v(i)) > std::abs(v(j)); });

  const double norm = std::abs(v(order[0]));
  const double t = detail::solve_time(r, std::log(norm));
  if (t < 0.0) throw NotInRangeError("not yet in range: scalar t < 0");
  const double rt = r(t);
  Vector sorted_t(k);
  sorted_t(0) = -t;
  double partial = -t;
  for (int i = 1; i < k; ++i) {
    const double cap = -rt - std::log(std::abs(v(order[static_cast<std::size_t>(i)])));
    sorted_t(i) = i + 1 < k ? std::min(cap, -partial) : -partial;
    partial += sorted_t(i);
  }
  const double tol = 1e-9 * std::max(1.0, t);
  const double last_cap = -rt - std::log(std::abs(v(order.back())));
  if (sorted_t(k - 1) > last_cap + tol) {
    throw ValidationError("witness violates prod|v_i| <= |v| psi(|v|) for the psi behind this rate");
  }
  out.scalar_t = t;
  out.t = Vector(k);
  for (int i = 0; i < k; ++i) out.t(order[static_cast<std::size_t>(i)]) = sorted_t(i);

  const ChamberPoint cp(out.t);
  if (std::abs(cp.minus_norm() - t) > tol || std::abs(sorted_t.minCoeff() + t) > tol) {
    detail::invariant_failure("chamber point |t|_- differs from t");
  }
  const double rhs = std::exp(-r(cp.minus_norm()));
  for (int i = 0; i < k; ++i) {
    if (std::exp(out.t(i)) * std::abs(v(i)) > rhs * (1.0 + 1e-9)) detail::invariant_failure("e^{t_i}|v_i| <= e^{-r}");
  }
  return out;
}

/// Converse direction: from a chamber point with Delta(exp(t) L) >= r(|t|_-),
/// the shortest vector of exp(t) L pulled back. Returns a witness with
/// has_zero set when some coordinate vanishes.
inline MAWitness chamber_to_ma_witness(const LatticeBasis& b, const RateFunction& r, const ChamberPoint& t) {
  const int k = b.dim();
  r.require_split(k - 1, 1);
  const double tm = t.minus_norm();
  const auto sv = shortest_vector(apply_multiflow(t, b));
  const double rt = r(tm);
  if (-std::log(sv.norm_value) < rt - kExcursionTolerance) {
    throw NotInRangeError("no excursion at t: Delta(exp(t) L) < r(|t|_-)");
  }
  MAWitness w;
  w.v.embed = b.embed(sv.coords);
  w.v.coords = sv.coords;
  w.v.norm_value = w.v.embed.cwiseAbs().maxCoeff();
  w.product = detail::abs_product(w.v.embed);
  w.has_zero = (w.v.embed.array() == 0.0).any();
  if (w.has_zero) return w;

  // Order |v_1| >= ... >= |v_k| and make -t_1 = |t|_- by interchanging entries.
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return std::abs(w.v.embed(i)) > std::abs(w.v.embed(j)); });
  Vector ts(k);
  for (int i = 0; i < k; ++i) ts(i) = t.coords()(order[static_cast<std::size_t>(i)]);
  Eigen::Index lowest = 0;
  ts.minCoeff(&lowest);
  if (lowest != 0) std::swap(ts(0), ts(lowest));
  const double rhs = std::exp(-rt);
  for (int i = 0; i < k; ++i) {
    if (std::exp(ts(i)) * std::abs(w.v.embed(order[static_cast<std::size_t>(i)])) > rhs * (1.0 + 1e-9)) {
      detail::invariant_failure("interchange broke e^{t_i}|v_i| <= e^{-r}");
    }
  }
  // prod|v_i| / |v| <= e^{t_1 - (k-1) r} = psi(e^{|t|_- - r}) <= psi(|v|).
  const double bound = std::exp(ts(0) - (k - 1) * rt);
  w.slack = w.v.norm_value * bound - w.product;
  const PsiFunction* psi = r.source();
  if (psi != nullptr && w.v.norm_value >= psi->x0()) w.slack = w.v.norm_value * (*psi)(w.v.norm_value) - w.product;
  if (w.slack < 0.0) {
    if (w.slack < -1e-9 * std::max(w.product, 1e-300) - detail::product_tolerance(w.v.embed)) {
      detail::invariant_failure("chamber_to_ma_witness slack < 0");
    }
    w.slack = 0.0;
  }
  return w;
}

}  // namespace lattice_lab
