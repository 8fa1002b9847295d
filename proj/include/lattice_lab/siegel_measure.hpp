#pragma once

// Random unimodular lattices and Monte-Carlo checks of the Siegel mean value
// formulas and of the tail Phi(z) = mu(Delta >= z).
//
// k = 2 is sampled exactly from Haar measure via the modular fundamental
// domain. For k >= 3 there is no such parametrization, so samples are taken
// along a long orbit of a generic diagonal flow ("surrogate"); every result
// built on it carries that label.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/special_functions/zeta.hpp>

#include "lattice_lab/errors.hpp"
#include "lattice_lab/flow_dynamics.hpp"
#include "lattice_lab/lattice_core.hpp"
#include "lattice_lab/parallel.hpp"
#include "lattice_lab/rng.hpp"

namespace lattice_lab {

enum class SamplerMode { exact2, surrogate };

inline const char* to_string(SamplerMode m) { return m == SamplerMode::exact2 ? "exact2" : "surrogate"; }

inline SamplerMode parse_sampler_mode(const std::string& s) {
  if (s == "exact2") return SamplerMode::exact2;
  if (s == "surrogate" || s == "orbit_surrogate") return SamplerMode::surrogate;
  throw ValidationError("sampler mode must be exact2 or surrogate, got '" + s + "'");
}

/// A point of the modular fundamental domain plus a rotation angle.
struct ModularPoint {
  double x = 0.0;
  double y = 1.0;
  double theta = 0.0;
};

class LatticeSampler {
 public:
  /// Samples are produced in blocks; block j depends only on (seed, j).
  static constexpr std::size_t kBlockSize = 256;
  static constexpr int kRejectionCap = 1000;

  LatticeSampler(int dim, SamplerMode mode, std::uint64_t seed) : dim_(dim), mode_(mode), seed_(seed) {
    if (dim < 2 || dim > kMaxDim) throw ValidationError("sampler dimension must be in [2, 6]");
    if (mode == SamplerMode::exact2 && dim != 2) throw ValidationError("exact2 sampler requires k = 2");
  }

  /// exact2 for k = 2, surrogate otherwise.
  static LatticeSampler standard(int dim, std::uint64_t seed) {
    return LatticeSampler(dim, dim == 2 ? SamplerMode::exact2 : SamplerMode::surrogate, seed);
  }

  int dim() const { return dim_; }
  SamplerMode mode() const { return mode_; }
  std::uint64_t seed() const { return seed_; }
  const char* label() const { return to_string(mode_); }

  /// (x, y) with density (3/pi) dx dy / y^2 on {|x| <= 1/2, x^2 + y^2 >= 1}, theta uniform.
  ModularPoint modular_point(std::size_t index) const {
    for (std::uint64_t attempt = 0;; ++attempt) {
      // A fresh stream per attempt block keeps the draw a function of the index alone.
      RandomStream rng(seed_, (static_cast<std::uint64_t>(index) << 8) | (attempt & 0xff));
      for (int i = 0; i < kRejectionCap; ++i) {
        const double x = rng.uniform() - 0.5;
        const double y = (std::sqrt(3.0) / 2.0) / (1.0 - rng.uniform());
        const double theta = 2.0 * std::numbers::pi * rng.uniform();
        if (x * x + y * y >= 1.0) return {x, y, theta};
      }
      if (attempt >= 0xff) detail::invariant_failure("modular rejection sampler never accepted");
    }
  }

  /// Rotation(theta) * [[1/sqrt y, x/sqrt y], [0, sqrt y]]: the lattice spanned by
  /// 1 and x + iy, scaled to covolume 1, then rotated.
  static LatticeBasis basis_of(const ModularPoint& p) {
    const double s = std::sqrt(p.y);
    Matrix b(2, 2);
    b << 1.0 / s, p.x / s, 0.0, s;
    Matrix rot(2, 2);
    rot << std::cos(p.theta), -std::sin(p.theta), std::sin(p.theta), std::cos(p.theta);
    return LatticeBasis(rot * b);
  }

  std::vector<LatticeBasis> block(std::size_t j) const {
    std::vector<LatticeBasis> out;
    out.reserve(kBlockSize);
    if (mode_ == SamplerMode::exact2) {
      for (std::size_t i = 0; i < kBlockSize; ++i) out.push_back(basis_of(modular_point(j * kBlockSize + i)));
      return out;
    }
    RandomStream rng(seed_, 0x5eed000000000000ULL | j);
    OrbitWalker walker(surrogate_flow(dim_), surrogate_start(rng, dim_));
    walker.advance(50.0 + 50.0 * rng.uniform());
    for (std::size_t i = 0; i < kBlockSize; ++i) {
      walker.advance(1.0 + rng.uniform());
      out.push_back(walker.lattice());
    }
    return out;
  }

  /// Exponents (1, sqrt2, sqrt3, sqrt5, sqrt7, sqrt11) truncated to k, centred
  /// and scaled to unit Euclidean length.
  static DiagonalFlow surrogate_flow(int k) {
    static constexpr std::array<double, 6> base{1.0, 1.4142135623730951, 1.7320508075688772,
                                                2.2360679774997898, 2.6457513110645907, 3.3166247903554};
    Vector a(k);
    for (int i = 0; i < k; ++i) a(i) = base[static_cast<std::size_t>(i)];
    a.array() -= a.mean();
    a /= a.norm();
    a(k - 1) -= a.sum();
    return DiagonalFlow(a);
  }

 private:
  // Lower times upper unipotent, entries in [0, 1). A purely upper-triangular
  // start contains e1, which the flow contracts forever.
  static LatticeBasis surrogate_start(RandomStream& rng, int k) {
    Matrix lo = Matrix::Identity(k, k), up = Matrix::Identity(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) {
        lo(j, i) = rng.uniform();
        up(i, j) = rng.uniform();
      }
    return LatticeBasis(lo * up);
  }

  int dim_;
  SamplerMode mode_;
  std::uint64_t seed_;
};

/// Calls fn(basis) on samples 0..N-1 and returns the results in sample order.
/// Deterministic for a given seed regardless of `threads`.
template <class Fn>
auto map_samples(const LatticeSampler& s, std::size_t n, int threads, Fn&& fn) {
  using R = decltype(fn(std::declval<const LatticeBasis&>()));
  const std::size_t blocks = (n + LatticeSampler::kBlockSize - 1) / LatticeSampler::kBlockSize;
  auto per_block = parallel_map(blocks, threads, [&](std::size_t j) {
    const auto lattices = s.block(j);
    const std::size_t first = j * LatticeSampler::kBlockSize;
    const std::size_t take = std::min(LatticeSampler::kBlockSize, n - first);
    std::vector<R> vals;
    vals.reserve(take);
    for (std::size_t i = 0; i < take; ++i) vals.push_back(fn(lattices[i]));
    return vals;
  });
  std::vector<R> out;
  out.reserve(n);
  for (auto& v : per_block) out.insert(out.end(), v.begin(), v.end());
  return out;
}

inline double zeta(int k) {
  if (k < 2) throw DomainError("zeta(k) needs k >= 2");
  return boost::math::zeta(static_cast<double>(k));
}

/// nu_k: volume of the norm ball of radius 1.
inline double ball_volume(int k, NormKind kind = NormKind::sup) { return unit_ball_volume(k, kind); }

/// Siegel mean of #(P(L) inside the radius-R ball): vol / zeta(k).
inline double siegel_prediction(int k, double radius, NormKind kind = NormKind::sup) {
  return ball_volume(k, kind) * std::pow(radius, k) / zeta(k);
}

/// Mean of #(P^2(L) inside ball x ball) for k >= 3: vol^2 / (zeta(k) zeta(k-1)).
inline double siegel_pair_prediction(int k, double radius, NormKind kind = NormKind::sup) {
  if (k < 3) throw DomainError("pair prediction needs k >= 3");
  const double v = ball_volume(k, kind) * std::pow(radius, k);
  return v * v / (zeta(k) * zeta(k - 1));
}

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(N)
  std::size_t samples = 0;
  std::string sampler;
};

namespace detail {

inline MeanEstimate mean_of(const std::vector<double>& xs, const char* label) {
  MeanEstimate out;
  out.samples = xs.size();
  out.sampler = label;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  if (xs.size() > 1) out.std_error = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  return out;
}

}  // namespace detail

inline MeanEstimate siegel_mc(const LatticeSampler& s, double radius, std::size_t n, int threads = 1,
                              NormKind kind = NormKind::sup) {
  if (!(radius > 0.0)) throw DomainError("siegel_mc needs R > 0");
  const auto counts = map_samples(s, n, threads, [&](const LatticeBasis& b) {
    return static_cast<double>(primitive_vectors_in_ball(b, radius, kind).size());
  });
  return detail::mean_of(counts, s.label());
}

inline MeanEstimate siegel_pair_mc(const LatticeSampler& s, double radius, std::size_t n, int threads = 1,
                                   NormKind kind = NormKind::sup) {
  if (!(radius > 0.0)) throw DomainError("siegel_pair_mc needs R > 0");
  const auto counts = map_samples(s, n, threads, [&](const LatticeBasis& b) {
    return static_cast<double>(primitive_pairs_in_ball(b, radius, kind));
  });
  return detail::mean_of(counts, s.label());
}

/// Phi(z) sandwich constants for the sup norm.
struct TailConstants {
  double c = 0.0;        // C_k = nu_k / (2 zeta(k))
  double c_prime = 0.0;  // C'_k = nu_k^2 c_{k,2} / 4 (k >= 3)
  int k = 2;
};

inline TailConstants tail_constants(int k, NormKind kind = NormKind::sup) {
  TailConstants out;
  out.k = k;
  const double nu = ball_volume(k, kind);
  out.c = 0.5 * nu / zeta(k);
  out.c_prime = k >= 3 ? 0.25 * nu * nu / (zeta(k) * zeta(k - 1)) : 0.0;
  return out;
}

inline double tail_upper(const TailConstants& c, double z) { return c.c * std::exp(-c.k * z); }

/// Lower envelope. For k = 2 two independent vectors in a sup ball of radius
/// rho < 1/sqrt2 would span area at most 2 rho^2 < 1, so the pair term is zero
/// there and the upper envelope is attained; below that radius no bound is used.
inline double tail_lower(const TailConstants& c, double z) {
  if (c.k == 2) return z >= 0.5 * std::log(2.0) ? c.c * std::exp(-2.0 * z) : 0.0;
  return std::max(0.0, c.c * std::exp(-c.k * z) - c.c_prime * std::exp(-2.0 * c.k * z));
}

struct TailEstimate {
  std::vector<double> z;
  std::vector<double> phi_hat;
  std::vector<double> ci;  // 95% normal-approximation half-width
  std::vector<std::size_t> hits;
  std::size_t samples = 0;
  std::string sampler;
  int k = 2;

  static constexpr std::size_t kMinHits = 10;
  bool scored(std::size_t i) const { return hits[i] >= kMinHits; }
  double sigma(std::size_t i) const {
    const double p = phi_hat[i];
    return std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
  }
};

inline TailEstimate tail_from_deltas(const std::vector<double>& deltas, const std::vector<double>& zgrid, int k,
                                     std::string label) {
  if (!std::is_sorted(zgrid.begin(), zgrid.end())) throw ValidationError("z-grid must be sorted");
  TailEstimate est;
  est.z = zgrid;
  est.samples = deltas.size();
  est.sampler = std::move(label);
  est.k = k;
  std::vector<double> sorted = deltas;
  std::sort(sorted.begin(), sorted.end());
  for (double z : zgrid) {
    const auto first = std::lower_bound(sorted.begin(), sorted.end(), z);
    const auto hits = static_cast<std::size_t>(sorted.end() - first);
    const double p = est.samples ? static_cast<double>(hits) / static_cast<double>(est.samples) : 0.0;
    est.hits.push_back(hits);
    est.phi_hat.push_back(p);
    est.ci.push_back(est.samples ? 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(est.samples)) : 0.0);
  }
  return est;
}

inline TailEstimate tail_distribution(const LatticeSampler& s, const std::vector<double>& zgrid, std::size_t n,
                                      int threads = 1, NormKind kind = NormKind::sup) {
  const auto deltas = map_samples(s, n, threads, [&](const LatticeBasis& b) { return delta(b, kind); });
  return tail_from_deltas(deltas, zgrid, s.dim(), s.label());
}

struct DLCheck {
  double c_hat = 0.0;
  double ci = 0.0;  // 95% half-width of c_hat at the minimizing pair
  bool pass = false;
};

/// c_hat = min over scored grid pairs (z, z + delta) of Phi(z + delta) / Phi(z).
inline DLCheck dl_check(const TailEstimate& est, double delta_z) {
  if (!(delta_z >= 0.0)) throw DomainError("dl_check needs delta >= 0");
  const double tol = 1e-9 * std::max(1.0, delta_z);
  DLCheck out;
  bool any = false;
  for (std::size_t i = 0; i < est.z.size(); ++i) {
    const double target = est.z[i] + delta_z;
    if (target > est.z.back() + tol) break;
    const auto it = std::find_if(est.z.begin(), est.z.end(), [&](double z) { return std::abs(z - target) <= tol; });
    if (it == est.z.end()) throw DomainError("z-grid has no point at z + delta: grid too coarse for delta");
    const auto j = static_cast<std::size_t>(it - est.z.begin());
    if (!est.scored(i) || !est.scored(j)) continue;
    const double ratio = est.phi_hat[j] / est.phi_hat[i];
    const double rel = std::sqrt(std::pow(est.sigma(i) / est.phi_hat[i], 2) + std::pow(est.sigma(j) / est.phi_hat[j], 2));
    if (!any || ratio < out.c_hat) {
      out.c_hat = ratio;
      out.ci = 1.96 * ratio * rel;
      any = true;
    }
  }
  if (!any) throw DomainError("no scored grid pair for dl_check");
  out.pass = out.c_hat - out.ci > 0.0;
  return out;
}

}  // namespace lattice_lab
