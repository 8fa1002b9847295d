#pragma once

// Exact geometry of unimodular lattices in R^k (2 <= k <= 6): LLL reduction,
// Fincke-Pohst enumeration, shortest vectors, the height function Delta and
// primitive vectors / tuples.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "lattice_lab/errors.hpp"
#include "lattice_lab/smith_form.hpp"

namespace lattice_lab {

inline constexpr int kMaxDim = 6;

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using IntVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using IntBasisChange = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

enum class NormKind { sup, euclidean };

inline const char* to_string(NormKind kind) { return kind == NormKind::sup ? "sup" : "euclidean"; }

inline NormKind parse_norm_kind(const std::string& s) {
  if (s == "sup" || s == "max") return NormKind::sup;
  if (s == "euclidean" || s == "l2") return NormKind::euclidean;
  throw ValidationError("unknown norm kind '" + s + "'");
}

template <class Derived>
double norm_of(const Eigen::MatrixBase<Derived>& v, NormKind kind) {
  if (v.size() == 0) return 0.0;
  return kind == NormKind::sup ? v.cwiseAbs().maxCoeff() : v.norm();
}

/// Volume of the unit ball of the norm in R^k.
inline double unit_ball_volume(int k, NormKind kind) {
  if (kind == NormKind::sup) return std::ldexp(1.0, k);
  return std::pow(M_PI, 0.5 * k) / std::tgamma(0.5 * k + 1.0);
}

/// Column generators of a unimodular lattice. Construction enforces
/// 2 <= k <= 6 and |det - 1| <= 1e-9.
class LatticeBasis {
 public:
  static constexpr double kUnimodularTolerance = 1e-9;

  explicit LatticeBasis(Matrix cols) : cols_(std::move(cols)) {
    if (cols_.rows() != cols_.cols() || cols_.rows() < 2 || cols_.rows() > kMaxDim) {
      throw ValidationError("lattice basis must be square with 2 <= k <= 6");
    }
    if (!cols_.allFinite()) throw ValidationError("lattice basis has non-finite entries");
    const double det = cols_.determinant();
    if (!(std::abs(det - 1.0) <= kUnimodularTolerance)) {
      throw ValidationError("lattice basis is not unimodular (det = " + std::to_string(det) + ")");
    }
  }

  static LatticeBasis identity(int k) { return LatticeBasis(Matrix::Identity(k, k)); }

  int dim() const { return static_cast<int>(cols_.rows()); }
  const Matrix& cols() const { return cols_; }

  Vector embed(const IntVector& coords) const { return cols_ * coords.cast<double>(); }

 private:
  Matrix cols_;
};

struct ShortVec {
  IntVector coords;  // w.r.t. the basis the vector was reported for
  Vector embed;
  double norm_value = 0.0;
};

struct ReducedBasis {
  Matrix basis;           // basis = original * transform
  IntBasisChange transform;
};

namespace detail {

struct GramSchmidt {
  Matrix mu;     // mu(i, j) for j < i
  Vector bstar;  // squared norms of the Gram-Schmidt vectors
};

inline GramSchmidt gram_schmidt(const Matrix& b) {
  const int k = static_cast<int>(b.cols());
  GramSchmidt gs{Matrix::Zero(k, k), Vector::Zero(k)};
  Matrix star = b;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < i; ++j) {
      gs.mu(i, j) = b.col(i).dot(star.col(j)) / gs.bstar(j);
      star.col(i) -= gs.mu(i, j) * star.col(j);
    }
    gs.bstar(i) = star.col(i).squaredNorm();
    if (!(gs.bstar(i) > 0.0)) throw ValidationError("basis vectors are linearly dependent");
  }
  return gs;
}

inline constexpr double kMaxExactCoefficient = 9.0e15;  // below 2^53

/// Floating-point LLL on the columns of `b` (any non-singular square matrix).
inline ReducedBasis lll(Matrix b, double delta) {
  const int k = static_cast<int>(b.cols());
  IntBasisChange u = IntBasisChange::Identity(k, k);
  GramSchmidt gs = gram_schmidt(b);
  int i = 1;
  long iterations = 0;
  while (i < k) {
    if (++iterations > 1000000) throw EnumerationLimitError("LLL did not terminate (basis too ill-conditioned)");
    for (int j = i - 1; j >= 0; --j) {
      const double q = std::nearbyint(gs.mu(i, j));
      if (q == 0.0) continue;
      if (std::abs(q) > kMaxExactCoefficient) throw EnumerationLimitError("LLL size reduction coefficient overflow");
      const auto qi = static_cast<std::int64_t>(q);
      b.col(i) -= q * b.col(j);
      u.col(i) -= qi * u.col(j);
      for (int l = 0; l < j; ++l) gs.mu(i, l) -= q * gs.mu(j, l);
      gs.mu(i, j) -= q;
    }
    if (u.col(i).cwiseAbs().maxCoeff() > static_cast<std::int64_t>(kMaxExactCoefficient)) {
      throw EnumerationLimitError("LLL transform entries exceed exact integer range");
    }
    const double m = gs.mu(i, i - 1);
    if (gs.bstar(i) >= (delta - m * m) * gs.bstar(i - 1)) {
      ++i;
    } else {
      b.col(i).swap(b.col(i - 1));
      u.col(i).swap(u.col(i - 1));
      gs = gram_schmidt(b);
      i = std::max(i - 1, 1);
    }
  }
  // Keep det(U) = +1 so orientation (and det B = 1) survives reduction.
  if (u.cast<double>().determinant() < 0.0) {
    b.col(k - 1) = -b.col(k - 1);
    u.col(k - 1) = -u.col(k - 1);
  }
  return {std::move(b), std::move(u)};
}

inline bool lex_less(const IntVector& a, const IntVector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

/// Flips the sign so that the first nonzero entry is positive.
inline IntVector canonical_sign(IntVector c) {
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    if (c(i) != 0) {
      if (c(i) < 0) c = -c;
      break;
    }
  }
  return c;
}

inline std::int64_t coordinate_gcd(const IntVector& c) {
  std::int64_t g = 0;
  for (Eigen::Index i = 0; i < c.size(); ++i) g = std::gcd(g, c(i) < 0 ? -c(i) : c(i));
  return g;
}

/// Visits every nonzero c with |reduced * c|^2 <= radius2 (Fincke-Pohst).
/// The visitor receives the coefficient vector and its squared Euclidean
/// norm and may lower `radius2` to prune the rest of the search.
template <class Visitor>
std::size_t enumerate_ball(const Matrix& reduced, double& radius2, std::size_t cap, Visitor&& visit) {
  const int k = static_cast<int>(reduced.cols());
  const GramSchmidt gs = gram_schmidt(reduced);
  IntVector x = IntVector::Zero(k);
  std::vector<double> partial(k + 1, 0.0);  // partial[j]: contribution of levels > j-1
  std::size_t visited = 0;
  constexpr double kSlack = 1e-10;

  auto recurse = [&](auto&& self, int level) -> void {
    double center = 0.0;
    for (int i = level + 1; i < k; ++i) center -= gs.mu(i, level) * static_cast<double>(x(i));
    const double budget = radius2 * (1.0 + kSlack) - partial[level + 1];
    if (budget < 0.0) return;
    const double half = std::sqrt(budget / gs.bstar(level));
    const double lo = std::ceil(center - half);
    const double hi = std::floor(center + half);
    if (hi - lo > 1.0e9) throw EnumerationLimitError("enumeration interval overflow (pathological conditioning)");
    for (double v = lo; v <= hi; v += 1.0) {
      const double d = v - center;
      const double contrib = partial[level + 1] + d * d * gs.bstar(level);
      if (contrib > radius2 * (1.0 + kSlack)) continue;
      x(level) = static_cast<std::int64_t>(v);
      partial[level] = contrib;
      if (level == 0) {
        if (x.any()) {
          if (++visited > cap) throw EnumerationLimitError("enumeration exceeded candidate cap");
          visit(static_cast<const IntVector&>(x), contrib);
        }
      } else {
        self(self, level - 1);
      }
    }
    x(level) = 0;
  };
  recurse(recurse, k - 1);
  return visited;
}

}  // namespace detail

inline constexpr double kLovaszDelta = 0.99;
inline constexpr std::size_t kDefaultEnumerationCap = 10'000'000;

/// Lovász-reduced basis B' = B * U with U unimodular (delta = 0.99).
inline ReducedBasis reduce_basis(const LatticeBasis& b) { return detail::lll(b.cols(), kLovaszDelta); }

namespace detail {

/// Shortest vector of the lattice generated by `cols` (square, nonsingular).
/// Ties in norm are broken by the lexicographically smallest canonical-sign
/// coordinate vector, with norms recomputed from `cols` itself.
inline ShortVec shortest_vector_of(const Matrix& cols, NormKind kind) {
  const int k = static_cast<int>(cols.cols());
  const ReducedBasis red = lll(cols, kLovaszDelta);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i) best = std::min(best, norm_of(red.basis.col(i), kind));
  const double scale = kind == NormKind::sup ? static_cast<double>(k) : 1.0;
  double radius2 = scale * best * best;

  std::vector<IntVector> candidates;
  constexpr double kTie = 1e-9;
  enumerate_ball(red.basis, radius2, kDefaultEnumerationCap, [&](const IntVector& c, double) {
    const double n = norm_of(red.basis * c.cast<double>(), kind);
    if (n > best * (1.0 + kTie)) return;
    if (n < best) {
      best = n;
      radius2 = scale * best * best;
      candidates.erase(std::remove_if(candidates.begin(), candidates.end(),
                                      [&](const IntVector& o) {
                                        return norm_of(red.basis * o.cast<double>(), kind) > best * (1.0 + kTie);
                                      }),
                       candidates.end());
    }
    candidates.push_back(c);
  });
  for (int i = 0; i < k; ++i) {
    IntVector e = IntVector::Zero(k);
    e(i) = 1;
    candidates.push_back(e);
  }

  ShortVec out;
  double out_norm = std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, IntVector>> scored;
  for (const IntVector& c_red : candidates) {
    IntVector c = canonical_sign(red.transform * c_red);
    scored.emplace_back(norm_of(cols * c.cast<double>(), kind), std::move(c));
    out_norm = std::min(out_norm, scored.back().first);
  }
  bool have = false;
  for (auto& [n, c] : scored) {
    if (n > out_norm * (1.0 + 1e-12)) continue;
    if (!have || lex_less(c, out.coords)) {
      out.coords = c;
      have = true;
    }
  }
  out.embed = cols * out.coords.cast<double>();
  out.norm_value = norm_of(out.embed, kind);
  return out;
}

}  // namespace detail

/// Global minimiser of |B c| over nonzero integer c. Coordinates refer to B.
inline ShortVec shortest_vector(const LatticeBasis& b, NormKind kind = NormKind::sup) {
  return detail::shortest_vector_of(b.cols(), kind);
}

/// Delta(L) = max over nonzero v of log(1/|v|) = -log(shortest norm).
inline double delta(const LatticeBasis& b, NormKind kind = NormKind::sup) {
  return -std::log(shortest_vector(b, kind).norm_value);
}

/// Nonzero c with |(B c)_i| <= halfwidths_i for every i. Works for any
/// nonsingular square B. Zero halfwidths are allowed.
inline std::vector<IntVector> lattice_points_in_box(const Matrix& b, const Vector& halfwidths,
                                                    std::size_t cap = kDefaultEnumerationCap) {
  const int k = static_cast<int>(b.cols());
  const double widest = halfwidths.maxCoeff();
  if (!(widest > 0.0)) return {};
  // Zero-width sides get a small positive width for the search only.
  const Vector search = halfwidths.cwiseMax(widest * 1e-7);
  Matrix scaled = search.cwiseInverse().asDiagonal() * b;
  const ReducedBasis red = detail::lll(scaled, kLovaszDelta);
  double radius2 = static_cast<double>(k);
  std::vector<IntVector> out;
  detail::enumerate_ball(red.basis, radius2, cap, [&](const IntVector& c_red, double) {
    if ((red.basis * c_red.cast<double>()).cwiseAbs().maxCoeff() > 1.0 + 1e-9) return;
    IntVector c = red.transform * c_red;
    const Vector v = b * c.cast<double>();
    if ((v.cwiseAbs().array() <= halfwidths.array()).all()) out.push_back(std::move(c));
  });
  return out;
}

/// All primitive v = B c (gcd of c equal to 1) with |v| <= radius, both signs,
/// sorted by norm then coordinates.
inline std::vector<ShortVec> primitive_vectors_in_ball(const LatticeBasis& b, double radius,
                                                       NormKind kind = NormKind::sup,
                                                       std::size_t cap = kDefaultEnumerationCap) {
  if (!(radius > 0.0)) throw DomainError("primitive_vectors_in_ball: radius must be positive");
  const int k = b.dim();
  const ReducedBasis red = reduce_basis(b);
  double radius2 = (kind == NormKind::sup ? static_cast<double>(k) : 1.0) * radius * radius;
  std::vector<ShortVec> out;
  detail::enumerate_ball(red.basis, radius2, cap, [&](const IntVector& c_red, double) {
    IntVector c = red.transform * c_red;
    if (detail::coordinate_gcd(c) != 1) return;
    Vector v = b.embed(c);
    const double n = norm_of(v, kind);
    if (n <= radius) out.push_back({std::move(c), std::move(v), n});
  });
  std::sort(out.begin(), out.end(), [](const ShortVec& a, const ShortVec& c) {
    if (a.norm_value != c.norm_value) return a.norm_value < c.norm_value;
    return detail::lex_less(a.coords, c.coords);
  });
  return out;
}

/// True iff the rows of `tuple` (d x k, 1 <= d < k) extend to a basis of Z^k,
/// i.e. its Smith normal form is [I_d | 0].
inline bool tuple_is_primitive(const IntMatrix& tuple) {
  const auto d = tuple.rows();
  const auto k = tuple.cols();
  if (d < 1 || d >= k) throw DomainError("tuple_is_primitive requires 1 <= d < k");
  const auto divisors = smith_invariant_factors(tuple);
  return std::all_of(divisors.begin(), divisors.end(), [](std::int64_t f) { return f == 1; });
}

/// Number of ordered pairs (v1, v2) in P^2(L) with both norms <= radius.
/// For k = 2 (outside the d < k range) the pair is counted when |det| = 1.
inline std::size_t primitive_pairs_in_ball(const LatticeBasis& b, double radius, NormKind kind = NormKind::sup,
                                           std::size_t cap = kDefaultEnumerationCap) {
  const auto prim = primitive_vectors_in_ball(b, radius, kind, cap);
  if (prim.size() * prim.size() > cap) throw EnumerationLimitError("primitive pair count exceeds cap");
  const int k = b.dim();
  std::size_t count = 0;
  for (std::size_t i = 0; i < prim.size(); ++i) {
    for (std::size_t j = 0; j < prim.size(); ++j) {
      if (i == j) continue;
      if (k == 2) {
        const std::int64_t det = prim[i].coords(0) * prim[j].coords(1) - prim[i].coords(1) * prim[j].coords(0);
        if (det == 1 || det == -1) ++count;
      } else {
        IntMatrix t(2, k);
        for (int c = 0; c < k; ++c) {
          t(0, c) = prim[i].coords(c);
          t(1, c) = prim[j].coords(c);
        }
        if (tuple_is_primitive(t)) ++count;
      }
    }
  }
  return count;
}

}  // namespace lattice_lab
