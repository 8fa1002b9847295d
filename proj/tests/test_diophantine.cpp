#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "lattice_lab/diophantine.hpp"
#include "oracles.hpp"

namespace lattice_lab {
namespace {

using CoordSet = std::set<std::vector<std::int64_t>>;

std::vector<std::int64_t> as_key(const IntVector& c) { return {c.data(), c.data() + c.size()}; }

Matrix scalar(double a) {
  Matrix m(1, 1);
  m << a;
  return m;
}

/// Convergent denominators q_k and numerators p_k of [a0; a1, a2, ...].
struct Convergent {
  std::int64_t p, q;
};
std::vector<Convergent> convergents(const std::vector<std::int64_t>& cf, std::int64_t qmax) {
  std::vector<Convergent> out;
  std::int64_t p0 = 1, q0 = 0, p1 = cf[0], q1 = 1;
  out.push_back({p1, q1});
  for (std::size_t i = 1; i < cf.size(); ++i) {
    const std::int64_t p2 = cf[i] * p1 + p0, q2 = cf[i] * q1 + q0;
    if (q2 > qmax) break;
    out.push_back({p2, q2});
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
  }
  return out;
}

TEST(PsiApproxWitnesses, HalfIsRational) {
  const auto psi = PsiFunction::power_log(1.0, 1.0, 0.0, 1.0);
  const auto ws = psi_approx_witnesses(scalar(0.5), psi, 40);
  std::set<std::int64_t> qs;
  for (const auto& w : ws) {
    qs.insert(w.q(0));
    EXPECT_GE(w.slack, 0.0);
  }
  std::set<std::int64_t> want{1};  // |1/2 + p| = 1/2 <= psi(1) = 1
  for (std::int64_t q = 2; q <= 40; q += 2) want.insert(q);
  EXPECT_EQ(qs, want);
  for (const auto& w : ws)
    if (w.q(0) % 2 == 0) EXPECT_EQ(w.residual_norm, 0.0);
}

TEST(PsiApproxWitnesses, GoldenRatioHasNoneBelowOneThird) {
  // Any solution of |q alpha + p| < 1/(2q) is a convergent (Legendre), and for
  // the golden ratio q_k |q_k alpha - p_k| = F_k alpha^k -> 1/sqrt5 > 1/3.
  const long double alpha = (std::sqrt(5.0L) - 1.0L) / 2.0L;
  std::vector<std::int64_t> golden(40, 1);
  golden[0] = 0;
  const auto conv = convergents(golden, 100000);
  for (const auto& c : conv) {
    if (c.q < 2) continue;
    EXPECT_GT(static_cast<long double>(c.q) * std::abs(c.q * alpha - c.p), 1.0L / 3.0L);
  }
  const auto psi = PsiFunction::power_log(1.0 / 3.0, 1.0, 0.0, 1.0);
  const auto ws = psi_approx_witnesses(scalar(static_cast<double>(alpha)), psi, 1e5);
  // q = 1 is the only small exception: |alpha - 1| = 0.382 > 1/3, so none at all.
  EXPECT_TRUE(ws.empty());
}

TEST(PsiApproxWitnesses, EMinusTwoMatchesConvergents) {
  // e - 2 = [0; 1, 2, 1, 1, 4, 1, 1, 6, ...].
  std::vector<std::int64_t> cf{0, 1};
  for (int j = 1; j <= 12; ++j) {
    cf.push_back(2 * j);
    cf.push_back(1);
    cf.push_back(1);
  }
  const long double alpha = std::exp(1.0L) - 2.0L;
  const double qmax = 1e5;
  std::set<std::int64_t> want;
  for (const auto& c : convergents(cf, static_cast<std::int64_t>(qmax))) {
    if (c.q < 1) continue;
    if (static_cast<long double>(c.q) * std::abs(c.q * alpha - c.p) <= 0.2L) want.insert(c.q);
  }
  const auto ws = psi_approx_witnesses(scalar(static_cast<double>(alpha)), PsiFunction::power_log(0.2, 1.0, 0.0, 1.0), qmax);
  std::set<std::int64_t> got;
  for (const auto& w : ws) got.insert(w.q(0));
  EXPECT_FALSE(got.empty());
  EXPECT_EQ(got, want);
}

TEST(PsiApproxWitnesses, RejectsBadInput) {
  const auto psi = PsiFunction::power_log(1.0, 1.0, 0.0, 1.0);
  EXPECT_THROW(psi_approx_witnesses(scalar(0.3), psi, 0.5), DomainError);
  EXPECT_THROW(psi_approx_witnesses(Matrix::Zero(1, 2), psi, 1e5, 1000), EnumerationLimitError);
}

TEST(LatticeWitnesses, MatrixFormMatchesLatticeForm) {
  RandomStream rng(31, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const int m = 1 + static_cast<int>(rng.below(2));
    const int n = 1 + static_cast<int>(rng.below(2));
    Matrix a(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = rng.uniform();
    // psi^{1/m} < 1/2 on the domain, so only the nearest p can qualify.
    const auto psi = PsiFunction::power_log(0.2, n == 1 ? 1.0 : 0.6, 0.0, 1.0);
    const double qmax = n == 1 ? 300 : 25;
    CoordSet want;
    for (const auto& w : psi_approx_witnesses(a, psi, qmax)) {
      IntVector c(m + n);
      c << w.p, w.q;
      want.insert(as_key(c));
      want.insert(as_key(-c));
    }
    CoordSet got;
    for (const auto& w : lattice_psi_approx_witnesses(lattice_of_matrix(a), psi, m, n, qmax)) {
      got.insert(as_key(w.v.coords));
      EXPECT_GE(w.slack, 0.0);
    }
    EXPECT_EQ(got, want) << "trial " << trial;
  }
}

TEST(LatticeWitnesses, StandardLatticeIsAlwaysApproximable) {
  const auto psi = PsiFunction::power_log(1e-6, 3.0, 0.0, 1.0);
  const auto ws = lattice_psi_approx_witnesses(LatticeBasis::identity(2), psi, 1, 1, 50);
  CoordSet got;
  for (const auto& w : ws) {
    got.insert(as_key(w.v.coords));
    if (w.v.coords(0) == 0) EXPECT_TRUE(w.upper_zero);
  }
  for (std::int64_t j = 1; j <= 50; ++j) {
    EXPECT_TRUE(got.count({0, j}));
    EXPECT_TRUE(got.count({0, -j}));
  }
  EXPECT_EQ(got.size(), 100u);
}

TEST(LatticeWitnesses, MatchBruteForce) {
  RandomStream rng(32, 0);
  for (int trial = 0; trial < 60; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(2));
    const int m = 1 + static_cast<int>(rng.below(k - 1));
    const int n = k - m;
    const LatticeBasis b(reduce_basis(LatticeBasis(oracle::random_unimodular_matrix(rng, k))).basis);
    const double inv = b.cols().inverse().cwiseAbs().rowwise().sum().maxCoeff();
    const int box = 20;
    const double rmax = box / inv;
    const auto psi = PsiFunction::power_log(rng.uniform(0.2, 1.0), 1.0, 0.0, 1.0);
    if (rmax < 1.0) continue;
    CoordSet want;
    oracle::for_each_in_box(k, box, [&](const IntVector& c) {
      const Vector v = b.cols() * c.cast<double>();
      const double up = v.head(m).cwiseAbs().maxCoeff();
      const double low = v.tail(n).cwiseAbs().maxCoeff();
      if (low > rmax || std::pow(low, n) < psi.x0()) return;
      if (std::pow(up, m) <= psi(std::pow(low, n))) want.insert(as_key(c));
    });
    CoordSet got;
    for (const auto& w : lattice_psi_approx_witnesses(b, psi, m, n, rmax)) got.insert(as_key(w.v.coords));
    EXPECT_EQ(got, want) << "trial " << trial;
  }
}

TEST(WitnessToTime, ClosedForms) {
  // r = 0: t = log |v_(n)| and both scaled coordinates are at most 1.
  const auto r0 = dani_forward(PsiFunction::power_log(1.0, 1.0, 0.0, 1.0), 1, 1);
  ApproxWitness w;
  w.upper_norm = std::exp(-2.5);
  w.lower_norm = std::exp(2.5);
  EXPECT_NEAR(witness_to_time(w, r0, 1, 1), 2.5, 1e-10);

  // psi = x^{-3}: r = t/2 and lambda = t/2, so t = 2 log |v_(n)|.
  const auto r3 = dani_forward(PsiFunction::power_log(1.0, 3.0, 0.0, 1.0), 1, 1);
  w.lower_norm = 40.0;
  w.upper_norm = std::pow(40.0, -3.0);
  EXPECT_NEAR(witness_to_time(w, r3, 1, 1), 2.0 * std::log(40.0), 1e-9);

  w.upper_norm = 1.0;  // not a witness for x^{-3}
  EXPECT_THROW(witness_to_time(w, r3, 1, 1), ValidationError);
  w.lower_norm = 0.5;  // below x0 = 1
  EXPECT_THROW(witness_to_time(w, r3, 1, 1), NotInRangeError);
}

TEST(WitnessToTime, FoundWitnessesGiveExcursions) {
  RandomStream rng(33, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 1 + static_cast<int>(rng.below(2));
    const int n = 1;
    Matrix a(m, n);
    for (int i = 0; i < m; ++i) a(i, 0) = rng.uniform();
    const auto psi = PsiFunction::power_log(0.3, 1.0, trial % 2 == 0 ? 0.0 : 1.0, 2.0);
    const auto r = dani_forward(psi, m, n);
    const auto la = lattice_of_matrix(a);
    const auto ws = lattice_psi_approx_witnesses(la, psi, m, n, 2000);
    for (const auto& w : ws) {
      if (w.v.coords(m) < 0) continue;
      const double t = witness_to_time(w, r, m, n);
      EXPECT_GE(delta(apply_flow(DiagonalFlow::split(m, n), t, la)), r(t) - 1e-9);
    }
  }
}

TEST(TimeToWitness, StandardLatticeFlag) {
  const auto r = RateFunction::constant(0.0, 1, 1);
  const auto w = time_to_witness(LatticeBasis::identity(2), r, 1, 1, 2.0);
  EXPECT_TRUE(w.upper_zero);
  EXPECT_EQ(w.v.coords(0), 0);
  EXPECT_EQ(std::abs(w.v.coords(1)), 1);
  EXPECT_THROW(time_to_witness(LatticeBasis::identity(2), RateFunction::constant(3.0, 1, 1), 1, 1, 2.0),
               NotInRangeError);
}

TEST(TimeToWitness, OrbitScanRoundTrip) {
  RandomStream rng(34, 0);
  int checked = 0;
  for (int trial = 0; trial < 10; ++trial) {
    Matrix a(1, 1);
    a << rng.uniform();
    const auto psi = PsiFunction::power_log(0.5, 1.0, 0.0, 1.0);
    const auto r = dani_forward(psi, 1, 1);
    const auto la = lattice_of_matrix(a);
    for (double t = r.t0() + 0.5; t < 14.0; t += 0.125) {
      const auto flow = DiagonalFlow::split(1, 1);
      if (delta(apply_flow(flow, t, la)) < r(t)) continue;
      const auto w = time_to_witness(la, r, 1, 1, t);
      EXPECT_GE(w.slack, 0.0);
      if (w.upper_zero || std::pow(w.lower_norm, 1) < psi.x0()) continue;
      EXPECT_LE(w.upper_norm, psi(w.lower_norm));
      const double t2 = witness_to_time(w, r, 1, 1);
      EXPECT_GE(delta(apply_flow(flow, t2, la)), r(t2) - 1e-9);
      ++checked;
    }
  }
  EXPECT_GT(checked, 20);
}

TEST(MAWitnesses, StandardLatticeAxisMultiples) {
  const auto psi = PsiFunction::power_log(1e-3, 1.0, 0.0, 1.0);
  const auto ws = ma_witnesses(LatticeBasis::identity(3), psi, 6);
  CoordSet got;
  for (const auto& w : ws) {
    got.insert(as_key(w.v.coords));
    EXPECT_TRUE(w.has_zero);
    EXPECT_EQ(w.product, 0.0);
  }
  for (std::int64_t j = 1; j <= 6; ++j) EXPECT_TRUE(got.count({j, 0, 0}));
  // Every nonzero integer vector in the cube with a zero coordinate: 13^3 - 12^3 - 1.
  EXPECT_EQ(got.size(), 13u * 13u * 13u - 12u * 12u * 12u - 1u);
}

TEST(MAWitnesses, PellLatticeThreshold) {
  // (p + q sqrt2, p - q sqrt2) / (2 sqrt2)^{1/2}: prod |v_i| = |p^2 - 2 q^2| / (2 sqrt2) >= 0.35355.
  const double scale = std::pow(2.0 * std::sqrt(2.0), -0.5);
  Matrix b(2, 2);
  b << std::sqrt(2.0), 1.0, -std::sqrt(2.0), 1.0;
  const LatticeBasis pell(b * scale);
  const double floor = 1.0 / (2.0 * std::sqrt(2.0));
  EXPECT_TRUE(ma_witnesses(pell, PsiFunction::power_log(0.35, 1.0, 0.0, 1.0), 1e3).empty());
  const auto ws = ma_witnesses(pell, PsiFunction::power_log(0.36, 1.0, 0.0, 1.0), 1e3);
  ASSERT_FALSE(ws.empty());
  for (const auto& w : ws) {
    const std::int64_t q = w.v.coords(0), p = w.v.coords(1);
    EXPECT_EQ(std::llabs(p * p - 2 * q * q), 1);
    EXPECT_NEAR(w.product, floor, 1e-9);
  }
}

TEST(MAWitnesses, MatchBruteForceAndMonotoneInPsi) {
  RandomStream rng(35, 0);
  for (int trial = 0; trial < 60; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(2));
    const LatticeBasis b(reduce_basis(LatticeBasis(oracle::random_unimodular_matrix(rng, k))).basis);
    const double inv = b.cols().inverse().cwiseAbs().rowwise().sum().maxCoeff();
    const int box = k == 2 ? 20 : 12;
    const double rmax = box / inv;
    const double c = rng.uniform(0.05, 0.5);
    const auto psi = PsiFunction::power_log(c, 1.0, 0.0, 1.0);
    if (rmax < 1.0) continue;
    CoordSet want;
    oracle::for_each_in_box(k, box, [&](const IntVector& cc) {
      const Vector v = b.cols() * cc.cast<double>();
      const double nv = v.cwiseAbs().maxCoeff();
      if (nv > rmax || nv < psi.x0()) return;
      double prod = 1.0;
      for (int i = 0; i < k; ++i) prod *= std::abs(v(i));
      if (prod <= nv * psi(nv)) want.insert(as_key(cc));
    });
    CoordSet got;
    for (const auto& w : ma_witnesses(b, psi, rmax)) {
      got.insert(as_key(w.v.coords));
      EXPECT_NEAR(w.product, std::abs(w.v.embed.prod()), 1e-12 * std::max(1.0, w.product));
      EXPECT_GE(w.slack, 0.0);
    }
    EXPECT_EQ(got, want) << "trial " << trial;
    CoordSet bigger;
    for (const auto& w : ma_witnesses(b, PsiFunction::power_log(2.0 * c, 1.0, 0.0, 1.0), rmax))
      bigger.insert(as_key(w.v.coords));
    EXPECT_TRUE(std::includes(bigger.begin(), bigger.end(), got.begin(), got.end()));
  }
}

TEST(MAWitnessToChamber, ClosedForm) {
  const auto r = dani_forward(PsiFunction::power_log(1.0, 1.0, 0.0, 1.0), 1, 1);
  const double s = 1.7;
  MAWitness w;
  w.v.embed = Vector(2);
  w.v.embed << std::exp(-s), std::exp(s);
  const auto out = ma_witness_to_chamber(w, r, 2);
  ASSERT_FALSE(out.zero_coordinate);
  EXPECT_NEAR(out.scalar_t, s, 1e-10);
  EXPECT_NEAR(out.t(0), s, 1e-10);
  EXPECT_NEAR(out.t(1), -s, 1e-10);
  EXPECT_NEAR(ChamberPoint(out.t).minus_norm(), s, 1e-10);

  w.v.embed << 0.0, 3.0;
  EXPECT_TRUE(ma_witness_to_chamber(w, r, 2).zero_coordinate);
}

TEST(MAWitnessToChamber, RandomWitnessesGiveExcursions) {
  RandomStream rng(36, 0);
  int checked = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(2));
    const LatticeBasis b(oracle::random_unimodular_matrix(rng, k));
    const auto psi = PsiFunction::power_log(0.3, 1.0, 0.0, 1.0);
    const auto r = dani_forward(psi, k - 1, 1);
    for (const auto& w : ma_witnesses(b, psi, k == 2 ? 1e4 : 300)) {
      if (w.has_zero || w.v.norm_value < std::exp(r.lambda(r.t0()))) continue;
      ChamberResult ch;
      try {
        ch = ma_witness_to_chamber(w, r, k);
      } catch (const NotInRangeError&) {
        continue;
      }
      const ChamberPoint cp(ch.t);
      EXPECT_NEAR(ch.t.sum(), 0.0, 1e-9);
      EXPECT_GE(delta(apply_multiflow(cp, b)), r(cp.minus_norm()) - 1e-9);
      const auto back = chamber_to_ma_witness(b, r, cp);
      EXPECT_GE(back.slack, 0.0);
      ++checked;
    }
  }
  EXPECT_GT(checked, 30);
}

}  // namespace
}  // namespace lattice_lab
