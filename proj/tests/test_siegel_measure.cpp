#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include "lattice_lab/siegel_measure.hpp"
#include "oracles.hpp"

namespace lattice_lab {
namespace {

const double kSixOverPiSq = 6.0 / (std::numbers::pi * std::numbers::pi);

/// (3/pi) * area{ |x| <= 1/2, y >= max(Y, sqrt(1 - x^2)) } in the measure dx dy / y^2.
/// The y integral is 1 / max(...); the x integral is a midpoint rule.
double modular_mass_above(double big_y) {
  const int nx = 200000;
  double mass = 0.0;
  for (int i = 0; i < nx; ++i) {
    const double x = -0.5 + (i + 0.5) / nx;
    mass += 1.0 / std::max(big_y, std::sqrt(1.0 - x * x));
  }
  return 3.0 / std::numbers::pi * mass / nx;
}

TEST(LatticeSampler, RejectsBadConfigurations) {
  EXPECT_THROW(LatticeSampler(3, SamplerMode::exact2, 1), ValidationError);
  EXPECT_THROW(LatticeSampler(7, SamplerMode::surrogate, 1), ValidationError);
  EXPECT_EQ(parse_sampler_mode("orbit_surrogate"), SamplerMode::surrogate);
  EXPECT_THROW(parse_sampler_mode("haar"), ValidationError);
}

TEST(LatticeSampler, FundamentalDomainMarginals) {
  EXPECT_NEAR(modular_mass_above(0.0), 1.0, 1e-6);  // total mass is 1
  const LatticeSampler s(2, SamplerMode::exact2, 77);
  const std::size_t n = 40000;
  for (double big_y : {1.5, 2.0, 3.0}) {
    std::size_t above = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = s.modular_point(i);
      ASSERT_LE(std::abs(p.x), 0.5);
      ASSERT_GE(p.x * p.x + p.y * p.y, 1.0);
      if (p.y > big_y) ++above;
    }
    const double want = modular_mass_above(big_y);
    EXPECT_NEAR(want, 3.0 / (std::numbers::pi * big_y), 1e-6);
    const double p_hat = static_cast<double>(above) / n;
    EXPECT_NEAR(p_hat, want, 3.0 * std::sqrt(want * (1 - want) / n));
  }
}

TEST(LatticeSampler, DeterministicAndThreadIndependent) {
  const LatticeSampler a(2, SamplerMode::exact2, 5), b(2, SamplerMode::exact2, 5);
  const auto x = a.block(3), y = b.block(3);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i].cols(), y[i].cols());
  for (int k : {2, 3}) {
    const auto s = LatticeSampler(k, SamplerMode::surrogate, 9);
    const auto d1 = map_samples(s, 700, 1, [](const LatticeBasis& l) { return delta(l); });
    const auto d3 = map_samples(s, 700, 3, [](const LatticeBasis& l) { return delta(l); });
    EXPECT_EQ(d1, d3);
  }
  const auto e1 = map_samples(a, 1000, 1, [](const LatticeBasis& l) { return delta(l); });
  const auto e4 = map_samples(a, 1000, 4, [](const LatticeBasis& l) { return delta(l); });
  EXPECT_EQ(e1, e4);
  const auto other = map_samples(LatticeSampler(2, SamplerMode::exact2, 6), 1000, 1,
                                 [](const LatticeBasis& l) { return delta(l); });
  EXPECT_NE(e1, other);
}

TEST(LatticeSampler, SamplesAreUnimodularWithNonNegativeDelta) {
  for (const auto& s : {LatticeSampler(2, SamplerMode::exact2, 1), LatticeSampler(3, SamplerMode::surrogate, 1),
                        LatticeSampler(4, SamplerMode::surrogate, 1)}) {
    for (const auto& b : s.block(0)) {
      EXPECT_NEAR(b.cols().determinant(), 1.0, 1e-9);
      EXPECT_GE(delta(b), 0.0);
    }
  }
}

TEST(LatticeSampler, NeighbouringStreamsAreUncorrelated) {
  const LatticeSampler s(2, SamplerMode::exact2, 2024);
  const auto d = map_samples(s, 80000, 1, [](const LatticeBasis& l) { return delta(l); });
  double mx = 0.0, my = 0.0;
  const std::size_t pairs = d.size() / 2;
  for (std::size_t i = 0; i < pairs; ++i) {
    mx += d[2 * i];
    my += d[2 * i + 1];
  }
  mx /= pairs;
  my /= pairs;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    const double a = d[2 * i] - mx, b = d[2 * i + 1] - my;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  EXPECT_LT(std::abs(sxy / std::sqrt(sxx * syy)), 0.02);
}

TEST(SiegelMC, PrimitiveCountMatchesOneOverZeta2) {
  const LatticeSampler s(2, SamplerMode::exact2, 11);
  const auto half = siegel_mc(s, 0.5, 30000);
  EXPECT_EQ(half.sampler, "exact2");
  EXPECT_NEAR(siegel_prediction(2, 0.5), kSixOverPiSq, 1e-14);
  EXPECT_NEAR(half.mean, kSixOverPiSq, 3.0 * half.std_error);

  const auto quarter = siegel_mc(s, 0.25, 30000);
  EXPECT_NEAR(quarter.mean * 4.0, half.mean, 3.0 * std::hypot(4.0 * quarter.std_error, half.std_error));

  const auto tiny = siegel_mc(s, 0.01, 100000);
  EXPECT_NEAR(tiny.mean, 0.0004 * kSixOverPiSq, 3.0 * std::max(tiny.std_error, 1e-5));
}

TEST(SiegelMC, CountsComeInSignPairs) {
  const LatticeSampler s(2, SamplerMode::exact2, 12);
  for (const auto& b : s.block(0)) EXPECT_EQ(primitive_vectors_in_ball(b, 0.8).size() % 2, 0u);
}

TEST(SiegelMC, SurrogateReproducesTheK2Mean) {
  const auto est = siegel_mc(LatticeSampler(2, SamplerMode::surrogate, 13), 0.5, 20000);
  EXPECT_EQ(est.sampler, "surrogate");
  EXPECT_NEAR(est.mean, kSixOverPiSq, 0.1 * kSixOverPiSq);
}

TEST(SiegelPairMC, ZeroBelowShortestAndK3Prediction) {
  EXPECT_EQ(siegel_pair_mc(LatticeSampler(3, SamplerMode::surrogate, 1), 1e-3, 300).mean, 0.0);
  const double want = siegel_pair_prediction(3, 0.6);
  EXPECT_NEAR(want, std::pow(1.2, 6) / (boost::math::zeta(3.0) * boost::math::zeta(2.0)), 1e-12);
  EXPECT_NEAR(want, 1.510, 1e-3);
  const auto est = siegel_pair_mc(LatticeSampler(3, SamplerMode::surrogate, 14), 0.6, 6000);
  EXPECT_NEAR(est.mean, want, 0.25 * want);
}

TEST(SiegelPairMC, OrderedPairsAreFourTimesSignClassPairs) {
  RandomStream rng(15, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const LatticeBasis b(oracle::random_unimodular_matrix(rng, 3));
    const double radius = rng.uniform(0.8, 1.4);
    const auto prim = primitive_vectors_in_ball(b, radius);
    std::vector<IntVector> classes;
    for (const auto& v : prim)
      if (oracle::positive_first(v.coords) == v.coords) classes.push_back(v.coords);
    std::size_t class_pairs = 0;
    for (std::size_t i = 0; i < classes.size(); ++i)
      for (std::size_t j = 0; j < classes.size(); ++j) {
        if (i == j) continue;
        IntMatrix t(2, 3);
        t.row(0) = classes[i].transpose();
        t.row(1) = classes[j].transpose();
        if (oracle::maximal_minor_gcd(t) == 1) ++class_pairs;
      }
    EXPECT_EQ(primitive_pairs_in_ball(b, radius), 4 * class_pairs);
  }
}

TEST(TailDistribution, K2MatchesTheExponentialLaw) {
  const std::vector<double> zs{0.0, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 3.0};
  const auto est = tail_distribution(LatticeSampler(2, SamplerMode::exact2, 16), zs, 40000);
  EXPECT_DOUBLE_EQ(est.phi_hat[0], 1.0);
  for (std::size_t i = 1; i < zs.size(); ++i) EXPECT_LE(est.phi_hat[i], est.phi_hat[i - 1]);
  const auto c = tail_constants(2);
  EXPECT_NEAR(c.c, 12.0 / (std::numbers::pi * std::numbers::pi), 1e-14);
  for (std::size_t i = 0; i < zs.size(); ++i) {
    if (!est.scored(i)) continue;
    EXPECT_LE(est.phi_hat[i], tail_upper(c, zs[i]) + 3.0 * est.sigma(i));
    if (zs[i] >= 0.5) EXPECT_NEAR(est.phi_hat[i], tail_lower(c, zs[i]), 3.0 * est.sigma(i)) << zs[i];
  }
  // Least-squares slope of log Phi over [0.75, 2.5].
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (std::size_t i = 0; i < zs.size(); ++i) {
    if (zs[i] < 0.75 || zs[i] > 2.5) continue;
    const double y = std::log(est.phi_hat[i]);
    sx += zs[i];
    sy += y;
    sxx += zs[i] * zs[i];
    sxy += zs[i] * y;
    ++cnt;
  }
  const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  EXPECT_NEAR(slope, -2.0, 0.1);
}

TEST(TailDistribution, EnvelopesForHigherK) {
  const auto c3 = tail_constants(3);
  EXPECT_NEAR(c3.c, 4.0 / boost::math::zeta(3.0), 1e-14);
  EXPECT_NEAR(c3.c_prime, 16.0 / (boost::math::zeta(3.0) * boost::math::zeta(2.0)), 1e-13);
  for (double z : {0.0, 0.5, 1.0, 2.0}) EXPECT_LE(tail_lower(c3, z), tail_upper(c3, z));
  EXPECT_EQ(tail_lower(tail_constants(2), 0.3), 0.0);
}

TEST(DLCheck, ExponentialTailAndEdgeCases) {
  TailEstimate est;
  est.samples = 100000000;
  est.k = 2;
  for (int i = 0; i <= 12; ++i) {
    const double z = 0.25 * i;
    est.z.push_back(z);
    est.phi_hat.push_back(0.5 * std::exp(-2.0 * z));
    est.hits.push_back(static_cast<std::size_t>(est.phi_hat.back() * est.samples));
    est.ci.push_back(0.0);
  }
  EXPECT_NEAR(dl_check(est, 0.5).c_hat, std::exp(-1.0), 1e-12);
  EXPECT_TRUE(dl_check(est, 0.5).pass);
  EXPECT_DOUBLE_EQ(dl_check(est, 0.0).c_hat, 1.0);
  EXPECT_THROW(dl_check(est, 0.3), DomainError);

  std::vector<double> zs;
  for (int i = 0; i <= 10; ++i) zs.push_back(0.25 * i);
  const auto mc = tail_distribution(LatticeSampler(2, SamplerMode::exact2, 17), zs, 40000);
  const auto chk = dl_check(mc, 0.5);
  EXPECT_NEAR(chk.c_hat, std::exp(-1.0), 1.5 * chk.ci);  // 1.5 * 1.96 sigma ~ 3 sigma
  EXPECT_TRUE(chk.pass);
}

}  // namespace
}  // namespace lattice_lab
