#pragma once

// Seeded desk-scale experiments: shrinking-target counts along orbits, their
// variance, the logarithm law, Khintchine-Groshev witness counts, the
// multiplicative threshold ladder and a qualitative mixing probe.
//
// Every experiment is a pure function of its config (seed included). Orbits
// are sampled at integer times.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lattice_lab/dani_transform.hpp"
#include "lattice_lab/diophantine.hpp"
#include "lattice_lab/flow_dynamics.hpp"
#include "lattice_lab/lattice_core.hpp"
#include "lattice_lab/parallel.hpp"
#include "lattice_lab/rng.hpp"
#include "lattice_lab/siegel_measure.hpp"

namespace lattice_lab {

/// Seed of replicate i of a multi-seed run.
inline std::uint64_t replicate_seed(std::uint64_t master, std::size_t i) {
  return splitmix64(master ^ splitmix64(0x7265706c69636174ULL + i));
}

/// "m:n" for the standard split, or a comma-separated exponent list ("2,-2").
inline DiagonalFlow parse_flow(const std::string& spec) {
  if (spec.find(':') != std::string::npos) return DiagonalFlow::parse_split(spec);
  std::vector<double> xs;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      xs.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw ValidationError("flow spec must be m:n or a comma-separated exponent list, got '" + spec + "'");
    }
  }
  Vector a(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) a(static_cast<Eigen::Index>(i)) = xs[i];
  return DiagonalFlow(a);
}

/// (number of expanding, number of contracting) exponents.
inline std::pair<int, int> flow_split_of(const DiagonalFlow& f) {
  int m = 0;
  for (Eigen::Index i = 0; i < f.exponents().size(); ++i) m += f.exponents()(i) > 0.0;
  return {m, f.dim() - m};
}

/// Delta(f_t L) for t = 1..horizon.
inline std::vector<double> orbit_deltas(const DiagonalFlow& flow, const LatticeBasis& start, long horizon,
                                        NormKind kind = NormKind::sup) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max(horizon, 0L)));
  OrbitWalker walker(flow, start);
  for (long t = 1; t <= horizon; ++t) {
    walker.advance(1.0);
    out.push_back(delta(walker.lattice(), kind));
  }
  return out;
}

/// Sample `index` of the standard sampler for dimension k.
inline LatticeBasis sample_lattice(int k, std::uint64_t seed, std::size_t index = 0) {
  const auto s = LatticeSampler::standard(k, seed);
  return s.block(index / LatticeSampler::kBlockSize)[index % LatticeSampler::kBlockSize];
}

/// Phi(z) = mu(Delta >= z), either the analytic mid-curve min(1, C_k e^{-kz})
/// or a log-linear interpolation of a Monte-Carlo tail.
class TailModel {
 public:
  static TailModel analytic(int k) {
    TailModel m;
    m.k_ = k;
    m.c_ = tail_constants(k).c;
    m.label_ = "analytic";
    return m;
  }

  static TailModel lookup(const TailEstimate& est) {
    if (est.z.size() < 2) throw ValidationError("tail lookup needs at least two grid points");
    TailModel m;
    m.k_ = est.k;
    for (std::size_t i = 0; i < est.z.size(); ++i) {
      if (est.phi_hat[i] <= 0.0) break;
      m.z_.push_back(est.z[i]);
      m.log_phi_.push_back(std::log(est.phi_hat[i]));
    }
    if (m.z_.size() < 2) throw ValidationError("tail lookup needs two points with positive estimates");
    m.label_ = "lookup:" + est.sampler;
    return m;
  }

  double operator()(double z) const {
    if (z <= 0.0) return 1.0;
    if (z_.empty()) return std::min(1.0, c_ * std::exp(-k_ * z));
    if (z <= z_.front()) return std::exp(log_phi_.front());
    std::size_t i = static_cast<std::size_t>(std::upper_bound(z_.begin(), z_.end(), z) - z_.begin());
    if (i >= z_.size()) i = z_.size() - 1;  // extrapolate the last slope
    const double w = (z - z_[i - 1]) / (z_[i] - z_[i - 1]);
    return std::min(1.0, std::exp(log_phi_[i - 1] + w * (log_phi_[i] - log_phi_[i - 1])));
  }

  const std::string& label() const { return label_; }

 private:
  int k_ = 2;
  double c_ = 0.0;
  std::vector<double> z_, log_phi_;
  std::string label_;
};

namespace detail {

inline double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  if (x.size() < 2) throw DomainError("regression needs at least two points");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

inline double median_of(std::vector<double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const std::size_t h = xs.size() / 2;
  return xs.size() % 2 ? xs[h] : 0.5 * (xs[h - 1] + xs[h]);
}

/// 1, 2, ..., 9, 10, 20, ..., 90, 100, ... up to and including `last`.
inline std::vector<long> decade_checkpoints(long last) {
  std::vector<long> out;
  for (long base = 1; base <= last; base *= 10)
    for (long d = 1; d <= 9 && d * base <= last; ++d) out.push_back(d * base);
  if (out.empty() || out.back() != last) out.push_back(last);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Shrinking-target counts S_N = #{t <= N : Delta(f_t L) >= r_t}.

struct BCCountConfig {
  std::string flow = "1:1";
  std::string rate = "log:c=0.5";
  long horizon = 10000;
  std::uint64_t seed = 0;
  NormKind norm = NormKind::sup;
  std::optional<TailEstimate> tail;  // default: analytic model
};

struct BCRow {
  long n = 0;
  long s = 0;
  double e = 0.0;
  double ratio = 0.0;
  double residual = 0.0;  // |S - E| / (sqrt(E) log^2 E), NaN while E <= e
};

struct BCReport {
  std::vector<BCRow> rows;
  long s_final = 0;
  double e_final = 0.0;
  double ratio_final = 0.0;
  double ratio_min_final_decade = 0.0;  // liminf proxy
  double ratio_max_final_decade = 0.0;  // limsup proxy
  long final_decade_increment = 0;      // S_N - S_{N/10}
  std::string sampler;
  std::string tail_model;
  std::vector<std::string> warnings;
};

inline BCReport bc_count(const BCCountConfig& cfg) {
  if (cfg.horizon < 10) throw ValidationError("bc_count: horizon must be >= 10");
  const auto flow = parse_flow(cfg.flow);
  const int k = flow.dim();
  const auto [m, n] = flow_split_of(flow);
  const auto rate = parse_rate(cfg.rate, m, n);
  const TailModel phi = cfg.tail ? TailModel::lookup(*cfg.tail) : TailModel::analytic(k);
  const auto deltas = orbit_deltas(flow, sample_lattice(k, cfg.seed), cfg.horizon, cfg.norm);

  BCReport rep;
  rep.sampler = to_string(LatticeSampler::standard(k, cfg.seed).mode());
  rep.tail_model = phi.label();
  const auto checkpoints = detail::decade_checkpoints(cfg.horizon);
  const long decade_start = cfg.horizon / 10;
  std::vector<long> s_at(static_cast<std::size_t>(cfg.horizon) + 1, 0);
  std::vector<double> e_at(static_cast<std::size_t>(cfg.horizon) + 1, 0.0);
  rep.ratio_min_final_decade = INFINITY;
  rep.ratio_max_final_decade = -INFINITY;
  std::size_t next = 0;
  for (long t = 1; t <= cfg.horizon; ++t) {
    const double r = rate(static_cast<double>(t));
    const auto ti = static_cast<std::size_t>(t);
    s_at[ti] = s_at[ti - 1] + (deltas[ti - 1] >= r ? 1 : 0);
    e_at[ti] = e_at[ti - 1] + phi(r);
    const double ratio = static_cast<double>(s_at[ti]) / e_at[ti];
    if (t >= decade_start) {
      rep.ratio_min_final_decade = std::min(rep.ratio_min_final_decade, ratio);
      rep.ratio_max_final_decade = std::max(rep.ratio_max_final_decade, ratio);
    }
    if (next < checkpoints.size() && checkpoints[next] == t) {
      const double e = e_at[ti];
      const double lg = std::log(e);
      const double residual = e > std::exp(1.0) ? std::abs(s_at[ti] - e) / (std::sqrt(e) * lg * lg)
                                                : std::numeric_limits<double>::quiet_NaN();
      rep.rows.push_back({t, s_at[ti], e, ratio, residual});
      ++next;
    }
  }
  const auto last = static_cast<std::size_t>(cfg.horizon);
  rep.s_final = s_at[last];
  rep.e_final = e_at[last];
  rep.ratio_final = static_cast<double>(rep.s_final) / rep.e_final;
  rep.final_decade_increment = s_at[last] - s_at[static_cast<std::size_t>(decade_start)];
  if (e_at[last] - e_at[static_cast<std::size_t>(decade_start)] < 1.0)
    rep.warnings.push_back("convergent regime: S_inf expected finite");
  return rep;
}

// ---------------------------------------------------------------------------
// Var(sum_{t=M}^N h_t) against sum mu(h_t), h_t = 1{Delta(f_t L) >= r_t}, k = 2.

struct BCVarianceConfig {
  std::string rate = "log:c=0.5";
  std::vector<std::pair<long, long>> windows{{1, 100}, {100, 1000}};
  std::size_t samples = 2000;
  std::uint64_t seed = 0;
  bool shuffle = false;  // assign thresholds through a random permutation of t
  int threads = 1;
};

struct BCVarianceRow {
  long m = 0, n = 0;
  double mean_sum = 0.0;
  double variance = 0.0;
  double sum_mu = 0.0;
  double ratio = 0.0;  // variance / sum_mu
};

struct BCVarianceReport {
  std::vector<BCVarianceRow> rows;
  double max_ratio = 0.0;
  bool shuffled = false;
  std::string sampler = "exact2";
};

inline BCVarianceReport bc_variance_probe(const BCVarianceConfig& cfg) {
  if (cfg.windows.empty() || cfg.samples < 2) throw ValidationError("bc_variance_probe: need windows and >= 2 samples");
  long horizon = 0;
  for (auto [m, n] : cfg.windows) {
    if (m < 1 || n < m) throw ValidationError("bc_variance_probe: windows need 1 <= M <= N");
    horizon = std::max(horizon, n);
  }
  const auto rate = parse_rate(cfg.rate, 1, 1);
  const auto phi = TailModel::analytic(2);
  const auto flow = DiagonalFlow::split(1, 1);

  // threshold[w][t - M] for window w, optionally permuted within the window.
  std::vector<std::vector<double>> thresholds;
  RandomStream perm_rng(cfg.seed, 0x73687566666c65ULL);
  for (auto [m, n] : cfg.windows) {
    std::vector<double> th;
    for (long t = m; t <= n; ++t) th.push_back(rate(static_cast<double>(t)));
    if (cfg.shuffle)
      for (std::size_t i = th.size(); i > 1; --i) std::swap(th[i - 1], th[perm_rng.below(i)]);
    thresholds.push_back(std::move(th));
  }

  const LatticeSampler sampler(2, SamplerMode::exact2, cfg.seed);
  const auto sums = map_samples(sampler, cfg.samples, cfg.threads, [&](const LatticeBasis& b) {
    const auto d = orbit_deltas(flow, b, horizon);
    std::vector<double> out;
    for (std::size_t w = 0; w < cfg.windows.size(); ++w) {
      const long m = cfg.windows[w].first;
      long count = 0;
      for (std::size_t j = 0; j < thresholds[w].size(); ++j)
        count += d[static_cast<std::size_t>(m - 1) + j] >= thresholds[w][j];
      out.push_back(static_cast<double>(count));
    }
    return out;
  });

  BCVarianceReport rep;
  rep.shuffled = cfg.shuffle;
  const double ns = static_cast<double>(cfg.samples);
  for (std::size_t w = 0; w < cfg.windows.size(); ++w) {
    double mean = 0.0;
    for (const auto& s : sums) mean += s[w];
    mean /= ns;
    double var = 0.0;
    for (const auto& s : sums) var += (s[w] - mean) * (s[w] - mean);
    var /= ns - 1.0;
    double mu = 0.0;
    for (double r : thresholds[w]) mu += phi(r);
    rep.rows.push_back({cfg.windows[w].first, cfg.windows[w].second, mean, var, mu, var / mu});
    rep.max_ratio = std::max(rep.max_ratio, var / mu);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Logarithm law: running maxima of Delta along the orbit against log T.

struct LogLawConfig {
  std::string flow = "1:1";
  long horizon = 100000;
  double fit_from = 100.0;
  std::size_t fit_points = 60;
  std::uint64_t seed = 0;
  NormKind norm = NormKind::sup;
};

struct LogLawReport {
  double slope = 0.0;
  double target = 0.0;  // 1/k
  std::vector<std::pair<long, double>> curve;  // (T, M(T)) at the fit points
  std::string sampler;
};

inline LogLawReport loglaw(const LogLawConfig& cfg) {
  if (!(cfg.fit_from >= 1.0) || cfg.horizon <= static_cast<long>(cfg.fit_from) || cfg.fit_points < 2)
    throw ValidationError("loglaw: need 1 <= fit_from < horizon and >= 2 fit points");
  const auto flow = parse_flow(cfg.flow);
  const int k = flow.dim();
  const auto d = orbit_deltas(flow, sample_lattice(k, cfg.seed), cfg.horizon, cfg.norm);
  std::vector<double> running(d.size());
  double best = -INFINITY;
  for (std::size_t i = 0; i < d.size(); ++i) running[i] = best = std::max(best, d[i]);

  LogLawReport rep;
  rep.target = 1.0 / k;
  rep.sampler = to_string(LatticeSampler::standard(k, cfg.seed).mode());
  std::vector<double> xs, ys;
  const double span = std::log(static_cast<double>(cfg.horizon) / cfg.fit_from);
  long prev = 0;
  for (std::size_t i = 0; i < cfg.fit_points; ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(cfg.fit_points - 1);
    const long t = std::min(cfg.horizon, std::lround(cfg.fit_from * std::exp(frac * span)));
    if (t == prev) continue;
    prev = t;
    rep.curve.emplace_back(t, running[static_cast<std::size_t>(t - 1)]);
    xs.push_back(std::log(static_cast<double>(t)));
    ys.push_back(running[static_cast<std::size_t>(t - 1)]);
  }
  rep.slope = detail::least_squares_slope(xs, ys);
  return rep;
}

// ---------------------------------------------------------------------------
// Khintchine-Groshev: psi-approximations of random A against the expected count.

struct KhinchinConfig {
  int m = 1, n = 1;
  std::string psi = "power_log:c=1,a=1";
  double qmax = 1e4;
  std::size_t samples = 200;
  std::uint64_t seed = 0;
  std::optional<Matrix> fixed_a;  // every sample uses this A instead of a random one
  int threads = 1;
};

struct KhinchinReport {
  std::vector<std::pair<double, double>> mean_count_at;  // (Q, mean count up to Q), decades
  double mean_count = 0.0;
  double predicted = 0.0;  // sum over canonical q of min(1, 2 psi^{1/m})^m
  double two_log_qmax = 0.0;
  double mean_final_decade_increment = 0.0;
  double mean_exact_zero = 0.0;  // witnesses with Aq + p = 0
  std::vector<std::size_t> counts;
};

/// Expected number of canonical q with |q| <= Qmax that psi-approximate a uniform A.
inline double khinchin_prediction(const PsiFunction& psi, int m, int n, double qmax) {
  double total = 0.0;
  for (long j = 1; j <= static_cast<long>(std::floor(qmax)); ++j) {
    const double x = std::pow(static_cast<double>(j), n);
    if (x < psi.x0()) continue;
    const double shell = 0.5 * (std::pow(2.0 * j + 1.0, n) - std::pow(2.0 * j - 1.0, n));
    total += shell * std::pow(std::min(1.0, 2.0 * std::pow(psi(x), 1.0 / m)), m);
  }
  return total;
}

inline KhinchinReport khinchin(const KhinchinConfig& cfg) {
  if (cfg.samples < 1 || !(cfg.qmax >= 10.0)) throw ValidationError("khinchin: need samples >= 1 and Qmax >= 10");
  const auto psi = PsiFunction::parse(cfg.psi);
  std::vector<double> decades;
  for (double q = cfg.qmax; q >= 1.0 && decades.size() < 6; q /= 10.0) decades.insert(decades.begin(), q);

  struct One {
    std::vector<std::size_t> at;
    std::size_t zeros = 0;
  };
  const auto runs = parallel_map(cfg.samples, cfg.threads, [&](std::size_t i) {
    Matrix a(cfg.m, cfg.n);
    if (cfg.fixed_a) {
      a = *cfg.fixed_a;
    } else {
      RandomStream rng(cfg.seed, i);
      for (Eigen::Index r = 0; r < a.rows(); ++r)
        for (Eigen::Index c = 0; c < a.cols(); ++c) a(r, c) = rng.uniform();
    }
    const auto ws = psi_approx_witnesses(a, psi, cfg.qmax);
    One o;
    for (double q : decades)
      o.at.push_back(static_cast<std::size_t>(std::count_if(ws.begin(), ws.end(), [&](const RationalWitness& w) {
        return w.q_norm <= q;
      })));
    for (const auto& w : ws) o.zeros += w.residual_norm == 0.0;
    return o;
  });

  KhinchinReport rep;
  const double ns = static_cast<double>(cfg.samples);
  for (std::size_t d = 0; d < decades.size(); ++d) {
    double mean = 0.0;
    for (const auto& o : runs) mean += static_cast<double>(o.at[d]);
    rep.mean_count_at.emplace_back(decades[d], mean / ns);
  }
  for (const auto& o : runs) {
    rep.counts.push_back(o.at.back());
    rep.mean_exact_zero += static_cast<double>(o.zeros) / ns;
  }
  rep.mean_count = rep.mean_count_at.back().second;
  rep.mean_final_decade_increment =
      decades.size() >= 2 ? rep.mean_count - rep.mean_count_at[decades.size() - 2].second : rep.mean_count;
  rep.predicted = khinchin_prediction(psi, cfg.m, cfg.n, cfg.qmax);
  rep.two_log_qmax = 2.0 * std::log(cfg.qmax);
  return rep;
}

// ---------------------------------------------------------------------------
// Multiplicative witnesses prod |v_i| <= |v| psi_q(|v|), psi_q = 1/(x log^q x),
// counted along a radius ladder for a family of q.

struct SkriganovConfig {
  int k = 2;
  std::vector<double> qs{0.5, 2.0};
  std::vector<double> ladder{100.0, 1000.0, 5000.0, 10000.0};
  std::size_t samples = 100;
  std::uint64_t seed = 0;
  bool integer_control = false;  // use Z^k for every sample
  int threads = 1;
};

struct SkriganovRow {
  double q = 0.0;
  std::vector<double> median_counts;  // per ladder rung
  double growth_fraction = 0.0;       // strictly increasing along the decade rungs
  double stagnation_fraction = 0.0;   // no new witness on the last rung
  std::vector<std::vector<std::size_t>> counts;  // [sample][rung]
};

struct SkriganovReport {
  std::vector<SkriganovRow> rows;
  std::vector<double> ladder;
  std::vector<std::size_t> decade_rungs;  // indices used for the growth test
  std::string sampler;
};

/// Rungs each at least 10x the previously chosen one, starting from the first.
inline std::vector<std::size_t> decade_rungs(const std::vector<double>& ladder) {
  std::vector<std::size_t> out{0};
  for (std::size_t i = 1; i < ladder.size(); ++i)
    if (ladder[i] >= 10.0 * ladder[out.back()] * (1.0 - 1e-12)) out.push_back(i);
  return out;
}

inline PsiFunction skriganov_psi(double q) { return PsiFunction::power_log(1.0, 1.0, q, std::exp(1.0)); }

inline SkriganovReport skriganov(const SkriganovConfig& cfg) {
  if (cfg.k < 2 || cfg.k > 3) throw ValidationError("skriganov: k must be 2 or 3");
  if (cfg.ladder.size() < 2 || !std::is_sorted(cfg.ladder.begin(), cfg.ladder.end()) || cfg.samples < 1)
    throw ValidationError("skriganov: need a sorted ladder of >= 2 radii and >= 1 sample");
  const LatticeSampler sampler = LatticeSampler::standard(cfg.k, cfg.seed);
  SkriganovReport rep;
  rep.ladder = cfg.ladder;
  rep.decade_rungs = decade_rungs(cfg.ladder);
  rep.sampler = cfg.integer_control ? "integer" : sampler.label();
  const double rmax = cfg.ladder.back();

  for (double q : cfg.qs) {
    const auto psi = skriganov_psi(q);
    SkriganovRow row;
    row.q = q;
    const auto per_lattice = [&](const LatticeBasis& b) {
      const auto ws = ma_witnesses(b, psi, rmax);
      std::vector<std::size_t> c;
      for (double r : cfg.ladder)
        c.push_back(static_cast<std::size_t>(
            std::count_if(ws.begin(), ws.end(), [&](const MAWitness& w) { return w.v.norm_value <= r; })));
      return c;
    };
    if (cfg.integer_control) {
      const LatticeBasis z(Matrix::Identity(cfg.k, cfg.k));
      row.counts.assign(cfg.samples, per_lattice(z));
    } else {
      row.counts = map_samples(sampler, cfg.samples, cfg.threads, per_lattice);
    }
    std::size_t grows = 0, stalls = 0;
    for (const auto& c : row.counts) {
      bool up = true;
      for (std::size_t j = 1; j < rep.decade_rungs.size(); ++j) up = up && c[rep.decade_rungs[j]] > c[rep.decade_rungs[j - 1]];
      grows += up;
      stalls += c[c.size() - 1] == c[c.size() - 2];
    }
    for (std::size_t r = 0; r < cfg.ladder.size(); ++r) {
      std::vector<double> col;
      for (const auto& c : row.counts) col.push_back(static_cast<double>(c[r]));
      row.median_counts.push_back(detail::median_of(col));
    }
    row.growth_fraction = static_cast<double>(grows) / static_cast<double>(cfg.samples);
    row.stagnation_fraction = static_cast<double>(stalls) / static_cast<double>(cfg.samples);
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Mixing probe (qualitative): cov(phi o f_t, psi) for Gaussian bumps in
// (Delta, log y), y = 1 / lambda_1^2 the height in the upper half plane.

struct Bump {
  bool constant = false;
  double delta_centre = 0.3;
  double logy_centre = 0.3;
};

struct MixingConfig {
  std::vector<double> times{0.0, 1.0, 2.0, 4.0, 8.0};
  std::size_t samples = 100000;
  double bandwidth = 0.25;
  Bump phi, psi;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct MixingReport {
  std::vector<std::pair<double, double>> correlation;  // (t, |cov|)
  double decay_rate = std::numeric_limits<double>::quiet_NaN();  // -slope of log |cov| in t, t > 0
  std::string sampler = "exact2";
  std::string note = "qualitative";
};

inline double bump_value(const Bump& b, double bandwidth, const LatticeBasis& l) {
  if (b.constant) return 1.0;
  const double d = delta(l, NormKind::sup) - b.delta_centre;
  const double ly = 2.0 * delta(l, NormKind::euclidean) - b.logy_centre;
  return std::exp(-(d * d + ly * ly) / (2.0 * bandwidth * bandwidth));
}

inline MixingReport mixing_probe(const MixingConfig& cfg) {
  if (cfg.samples < 2 || cfg.times.empty() || !std::is_sorted(cfg.times.begin(), cfg.times.end()) ||
      cfg.times.front() < 0.0 || !(cfg.bandwidth > 0.0))
    throw ValidationError("mixing_probe: need >= 2 samples, sorted non-negative times, bandwidth > 0");
  const auto flow = DiagonalFlow::split(1, 1);
  const LatticeSampler sampler(2, SamplerMode::exact2, cfg.seed);
  const auto vals = map_samples(sampler, cfg.samples, cfg.threads, [&](const LatticeBasis& b) {
    std::vector<double> out{bump_value(cfg.psi, cfg.bandwidth, b)};
    OrbitWalker walker(flow, b);
    double now = 0.0;
    for (double t : cfg.times) {
      if (t > now) walker.advance(t - now);
      now = t;
      out.push_back(bump_value(cfg.phi, cfg.bandwidth, walker.lattice()));
    }
    return out;
  });
  const double ns = static_cast<double>(cfg.samples);
  double mean_psi = 0.0;
  for (const auto& v : vals) mean_psi += v[0];
  mean_psi /= ns;

  MixingReport rep;
  std::vector<double> xs, ys;
  for (std::size_t j = 0; j < cfg.times.size(); ++j) {
    double mean_phi = 0.0;
    for (const auto& v : vals) mean_phi += v[j + 1];
    mean_phi /= ns;
    double cov = 0.0;
    for (const auto& v : vals) cov += (v[j + 1] - mean_phi) * (v[0] - mean_psi);
    cov = std::abs(cov / ns);
    rep.correlation.emplace_back(cfg.times[j], cov);
    if (cfg.times[j] > 0.0 && cov > 0.0) {
      xs.push_back(cfg.times[j]);
      ys.push_back(std::log(cov));
    }
  }
  if (xs.size() >= 2) rep.decay_rate = -detail::least_squares_slope(xs, ys);
  return rep;
}

}  // namespace lattice_lab
