#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "lattice_lab/dani_transform.hpp"
#include "lattice_lab/rng.hpp"

namespace lattice_lab {
namespace {

TEST(PsiFunction, ParsesAndValidates) {
  const auto psi = PsiFunction::parse("power_log:c=1,a=1,q=2,x0=2");
  EXPECT_NEAR(psi(10.0), 1.0 / (10.0 * std::pow(std::log(10.0), 2)), 1e-16);
  EXPECT_DOUBLE_EQ(PsiFunction::parse("power_log:x0=e").x0(), std::exp(1.0));
  EXPECT_THROW(PsiFunction::parse("power_log:c=1,z=3"), ValidationError);
  EXPECT_THROW(PsiFunction::parse("power:c=1"), ValidationError);
  EXPECT_THROW(PsiFunction::parse("power_log:q=1"), ValidationError);  // x0 = 1 with q != 0
  // P'(lambda) = 0.1 - 1/lambda < 0 near x0 = 2: increasing psi.
  EXPECT_THROW(PsiFunction::power_log(1.0, 0.1, -1.0, 2.0), ValidationError);
  EXPECT_THROW(PsiFunction::tabulated({0.0, 1.0, 2.0}, {0.0, 1.0, 0.5}), ValidationError);
  EXPECT_THROW(psi(1.5), DomainError);
}

TEST(PsiFunction, TabulatedInterpolatesAndFlagsExtrapolation) {
  const auto psi = PsiFunction::tabulated({0.0, 1.0, 2.0}, {0.0, 2.0, 3.0});
  EXPECT_DOUBLE_EQ(psi.neg_log(0.5), 1.0);
  EXPECT_DOUBLE_EQ(psi.neg_log(4.0), 5.0);  // last slope 1
  EXPECT_FALSE(psi.is_extrapolated(std::exp(1.5)));
  EXPECT_TRUE(psi.is_extrapolated(std::exp(2.5)));
}

TEST(DaniForward, EpsilonOverXGivesConstantRate) {
  for (double eps : {1.0, 0.5, 0.1, 1e-3}) {
    for (auto [m, n] : {std::pair{1, 1}, std::pair{2, 1}, std::pair{1, 3}}) {
      const auto r = dani_forward(PsiFunction::power_log(eps, 1.0, 0.0, 1.0), m, n);
      const double want = std::log(1.0 / eps) / (m + n);
      for (double t : {r.t0(), r.t0() + 0.3, r.t0() + 7.0, r.t0() + 250.0}) EXPECT_NEAR(r(t), want, 1e-9);
    }
  }
}

TEST(DaniForward, PowerLawClosedForm) {
  // psi = x^{-a}, x0 = 1: a lambda = ((m+n) t - m lambda)/n, so r = (a-1) t/(m + a n).
  const auto r = dani_forward(PsiFunction::power_log(1.0, 3.0, 0.0, 1.0), 1, 1);
  EXPECT_DOUBLE_EQ(r.t0(), 0.0);
  for (double t : {0.0, 0.5, 2.0, 40.0}) {
    EXPECT_NEAR(r(t), t / 2.0, 1e-10 * std::max(1.0, t));
    EXPECT_NEAR(r.lambda(t), t / 2.0, 1e-10 * std::max(1.0, t));
    EXPECT_NEAR(r.big_l(t), 1.5 * t, 1e-10 * std::max(1.0, t));
  }
  for (double a : {1.5, 2.0, 4.0}) {
    for (auto [m, n] : {std::pair{2, 1}, std::pair{1, 2}, std::pair{3, 2}}) {
      const auto rr = dani_forward(PsiFunction::power_log(1.0, a, 0.0, 1.0), m, n);
      for (double t : {1.0, 9.0}) EXPECT_NEAR(rr(t), (a - 1.0) * t / (m + a * n), 1e-9);
    }
  }
  EXPECT_THROW(r(-0.1), DomainError);
}

TEST(DaniForward, ResidualAndMonotonicityOnPowerLogFamily) {
  RandomStream rng(8, 0);
  for (double a : {1.0, 1.5, 3.0}) {
    for (double q : {0.0, 1.0, 2.0}) {
      const auto psi = PsiFunction::power_log(0.7, a, q, 2.0);
      for (auto [m, n] : {std::pair{1, 1}, std::pair{2, 1}, std::pair{1, 2}}) {
        const auto r = dani_forward(psi, m, n);
        double max_res = 0.0;
        for (int i = 0; i < 1000; ++i) {
          const double t = r.t0() + rng.uniform(0.0, 200.0);
          max_res = std::max(max_res, dani_residual(psi, r, t));
        }
        EXPECT_LE(max_res, 1e-8);
        std::vector<double> grid;
        for (int i = 0; i <= 400; ++i) grid.push_back(r.t0() + 0.05 * i);
        EXPECT_NO_THROW(r.validate(grid));
        EXPECT_TRUE(quasi_increasing_check(r, RateFunction::default_quasi_constant(m), grid));
      }
    }
  }
}

TEST(DaniInverse, ConstantAndLinearRates) {
  const double rho = 0.4;
  const auto psi = dani_inverse(RateFunction::constant(rho, 2, 1), 2, 1);
  for (double x : {1.0, 3.0, 1e5, 1e40}) {
    EXPECT_NEAR(psi(x) * x, std::exp(-3.0 * rho), 1e-9);
  }
  EXPECT_TRUE(psi.is_extrapolated(1e40));

  const auto cube = dani_inverse(RateFunction::linear(0.5, 1, 1), 1, 1);
  for (double x : {1.0, 2.0, 50.0, 1e6}) EXPECT_NEAR(std::log(cube(x)), -3.0 * std::log(x), 1e-9);

  EXPECT_THROW(dani_inverse(RateFunction::linear(2.0, 1, 1), 1, 1), ValidationError);    // lambda decreasing
  EXPECT_THROW(dani_inverse(RateFunction::linear(-2.0, 1, 1), 1, 1), ValidationError);   // L decreasing
  EXPECT_THROW(dani_inverse(RateFunction::constant(0.0, 1, 1), 2, 1), ValidationError);  // split mismatch
}

TEST(DaniInverse, RoundTripsOnPowerLogFamily) {
  for (double a : {1.0, 1.5, 3.0}) {
    for (double q : {0.0, 1.0}) {
      const auto psi = PsiFunction::power_log(1.0, a, q, 2.0);
      const auto r = dani_forward(psi, 1, 1);
      const auto tab = dani_inverse(r, 1, 1);
      const auto back = dani_forward(tab, 1, 1);
      double err_r = 0.0, err_psi = 0.0;
      for (int i = 0; i <= 600; ++i) {
        const double t = r.t0() + 0.1 * i;
        err_r = std::max(err_r, std::abs(back(t) - r(t)) / std::max(1.0, std::abs(r(t))));
        const double lam = r.lambda(t);
        err_psi = std::max(err_psi, std::abs(tab.neg_log(lam) - psi.neg_log(lam)));
      }
      EXPECT_LE(err_r, 1e-6) << "a=" << a << " q=" << q;
      EXPECT_LE(err_psi, 1e-6) << "a=" << a << " q=" << q;
    }
  }
}

TEST(IntegralProbe, ClosedForms) {
  const auto inv_sq = PsiFunction::power_log(1.0, 2.0, 0.0, 1.0);
  for (double x : {2.0, 10.0, 1e4}) EXPECT_NEAR(integral_probe(inv_sq, 0, x), 1.0 - 1.0 / x, 1e-10);
  EXPECT_NEAR(integral_probe_log(inv_sq, 0, 200.0), 1.0, 1e-10);
  // int_0^inf lambda e^{-lambda} d lambda = 1.
  EXPECT_NEAR(integral_probe_log(inv_sq, 1, 200.0), 1.0, 1e-9);

  const double eps = 0.25;
  const auto flat = PsiFunction::power_log(eps, 1.0, 0.0, 1.0);
  EXPECT_NEAR(integral_probe(flat, 0, 1e6), eps * std::log(1e6), 1e-9);
  const auto r = dani_forward(flat, 1, 1);
  // e^{-2r} = eps, so I2(T) = eps (T - t0) grows linearly.
  EXPECT_NEAR(rate_integral_probe(r, 0, 1, 1, 100.0), eps * (100.0 - r.t0()), 1e-8);
  EXPECT_FALSE(cauchy_tail_check([&](double t) { return rate_integral_probe(r, 0, 1, 1, t); }, 1e4).converged);
  EXPECT_FALSE(cauchy_tail_check([&](double l) { return integral_probe_log(flat, 0, l); }, 1e4).converged);
  EXPECT_THROW(integral_probe(flat, -1, 10.0), DomainError);
}

TEST(IntegralProbe, JointConvergenceForLogSquaredFamily) {
  // psi = 1/(x log^2 x) on [e, inf): I1 = 1 - 1/log X.
  const auto psi = PsiFunction::power_log(1.0, 1.0, 2.0, std::exp(1.0));
  EXPECT_NEAR(integral_probe_log(psi, 0, 10.0), 0.9, 1e-10);
  EXPECT_TRUE(cauchy_tail_check([&](double l) { return integral_probe_log(psi, 0, l); }, 1e7).converged);
  const auto r = dani_forward(psi, 1, 1);
  const auto tail = cauchy_tail_check([&](double t) { return rate_integral_probe(r, 0, 1, 1, t); }, 1e7);
  EXPECT_TRUE(tail.converged);
  EXPECT_GT(tail.at_t, 0.0);

  // The q = 1 weight tips the same family into divergence on both sides.
  EXPECT_FALSE(cauchy_tail_check([&](double l) { return integral_probe_log(psi, 1, l); }, 1e4).converged);
  EXPECT_FALSE(cauchy_tail_check([&](double t) { return rate_integral_probe(r, 1, 1, 1, t); }, 1e4).converged);
}

TEST(QuasiIncreasing, Examples) {
  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(0.1 * i);
  EXPECT_TRUE(quasi_increasing_check(RateFunction::constant(3.0, 1, 1), 1e-6, grid));
  EXPECT_TRUE(quasi_increasing_check(RateFunction::linear(0.5, 1, 1), 1.0, grid));
  EXPECT_FALSE(quasi_increasing_check(RateFunction::linear(-1.0, 1, 1), 0.5, grid));
  EXPECT_THROW(quasi_increasing_check(RateFunction::constant(0.0, 1, 1), 1.0, {1.0, 0.0}), ValidationError);
}

TEST(ParseRate, Families) {
  EXPECT_DOUBLE_EQ(parse_rate("const:v=0.3", 1, 1)(5.0), 0.3);
  EXPECT_DOUBLE_EQ(parse_rate("log:c=0.5", 1, 1)(std::exp(2.0)), 1.0);
  EXPECT_DOUBLE_EQ(parse_rate("linear:s=0.5", 1, 1)(4.0), 2.0);
  const auto r = parse_rate("psi:power_log:c=0.5,a=1", 1, 1);
  EXPECT_NEAR(r(3.0), std::log(2.0) / 2.0, 1e-12);
  ASSERT_NE(r.source(), nullptr);
  EXPECT_THROW(parse_rate("cubic:s=1", 1, 1), ValidationError);
  EXPECT_THROW(parse_rate("log:c=1,zz=2", 1, 1), ValidationError);
}

}  // namespace
}  // namespace lattice_lab
