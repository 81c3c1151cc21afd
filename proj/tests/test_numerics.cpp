#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "pgreen/numerics.hpp"

using namespace pgreen;

TEST(Quadrature, PolynomialExact) {
  const double v = integrate([](double x) { return 3.0 * x * x; }, 0.0, 2.0);
  EXPECT_NEAR(v, 8.0, 1e-13);
}

TEST(Quadrature, LogSpaceMatchesClosedForm) {
  // int_1^100 dx / x^2 = 1 - 1/100
  const double v = integrate_logspace([](double x) { return 1.0 / (x * x); }, 1.0, 100.0);
  EXPECT_NEAR(v, 0.99, 1e-12);
}

TEST(Quadrature, ReversedBoundsFlipSign) {
  const double a = integrate_logspace([](double x) { return std::exp(-x); }, 1.0, 5.0);
  const double b = integrate_logspace([](double x) { return std::exp(-x); }, 5.0, 1.0);
  EXPECT_NEAR(a, -b, 1e-15);
}

TEST(Roots, NewtonMonotoneFindsCubeRoot) {
  auto f = [](double x) { return x * x * x - 20.0; };
  auto df = [](double x) { return 3.0 * x * x; };
  const double x = newton_monotone(f, df, 0.0, 10.0, 5.0);
  EXPECT_NEAR(x, std::cbrt(20.0), 1e-13);
}

TEST(Roots, SolveIncreasingHandlesFlatStart) {
  auto f = [](double x) { return std::pow(x, 5.0) - 1e-8; };
  const double x = solve_increasing(f, 0.0, 2.0);
  EXPECT_NEAR(x, std::pow(1e-8, 0.2), 1e-10);
}

TEST(Roots, InvalidBracketThrows) {
  auto f = [](double x) { return x + 10.0; };
  EXPECT_THROW(solve_increasing(f, 0.0, 1.0), RootError);
}

TEST(Derivative, RichardsonOnExp) {
  const DerivativeResult d = derivative_richardson([](double x) { return std::exp(x); }, 1.0, 1e-2);
  EXPECT_NEAR(d.value, std::exp(1.0), 1e-11);
  EXPECT_LT(d.error, 1e-9);
}

TEST(Derivative, LogStepOnPowerLaw) {
  // d/dt t^{-3} = -3 t^{-4}
  const DerivativeResult d = derivative_log([](double t) { return std::pow(t, -3.0); }, 0.37);
  EXPECT_NEAR(d.value, -3.0 * std::pow(0.37, -4.0), 1e-9 * std::pow(0.37, -4.0));
}

TEST(PowerFit, RecoversExponentAndCoefficient) {
  std::vector<double> xs, ys;
  for (double x = 1.0; x <= 10.0; x *= 1.3) {
    xs.push_back(x);
    ys.push_back(2.5 * std::pow(x, -1.7));
  }
  const PowerFit fit = fit_power_law(xs, ys);
  EXPECT_NEAR(fit.exponent, -1.7, 1e-12);
  EXPECT_NEAR(fit.coefficient, 2.5, 1e-12);
  EXPECT_LT(fit.max_residual, 1e-12);
}

TEST(Tridiagonal, SolvesSmallSystem) {
  // [2 1 0; 1 2 1; 0 1 2] x = [4; 8; 8] -> x = [1; 2; 3]
  const std::vector<double> x =
      solve_tridiagonal({0, 1, 1}, {2, 2, 2}, {1, 1, 0}, {4, 8, 8});
  ASSERT_EQ(x.size(), 3u);
  EXPECT_NEAR(x[0], 1.0, 1e-14);
  EXPECT_NEAR(x[1], 2.0, 1e-14);
  EXPECT_NEAR(x[2], 3.0, 1e-14);
}

TEST(Grids, LogspaceEndpointsExact) {
  const std::vector<double> g = logspace(1e-4, 1e4, 33);
  EXPECT_EQ(g.front(), 1e-4);
  EXPECT_EQ(g.back(), 1e4);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_LT(g[i - 1], g[i]);
}
