#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "pgreen/green.hpp"

using namespace pgreen;

namespace {

WarpedMetric power_cap(double alpha, double transition, double p) {
  return make_metric(MetricFamily::power_cap,
                     {{"alpha", alpha}, {"transition", transition}, {"p", p}});
}

const double kFourPi = 4.0 * kPi;

}  // namespace

TEST(MuModel, PaperValuesAtOne) {
  EXPECT_NEAR(mu_model(PParam(2.0), 1.0), 1.0 / kFourPi, 1e-16);
  EXPECT_NEAR(mu_model(PParam(1.5), 1.0), 1.0 / (48.0 * kPi * kPi), 1e-18);
}

TEST(MuModel, HomogeneityAtPTwo) {
  EXPECT_NEAR(mu_model(PParam(2.0), 2.0), mu_model(PParam(2.0), 1.0) / 2.0, 1e-17);
}

TEST(MuModel, DerivativesConsistent) {
  const PParam p(1.5);
  for (double r : {0.2, 1.0, 3.0}) {
    const double h = 1e-5 * r;
    const double fd1 = (mu_model(p, r + h) - mu_model(p, r - h)) / (2 * h);
    const double fd2 = (mu_model_d1(p, r + h) - mu_model_d1(p, r - h)) / (2 * h);
    EXPECT_NEAR(mu_model_d1(p, r), fd1, 1e-8 * std::abs(fd1));
    EXPECT_NEAR(mu_model_d2(p, r), fd2, 1e-8 * std::abs(fd2));
  }
  EXPECT_THROW(mu_model(PParam(2.0), 0.0), std::domain_error);
}

TEST(SolveGreen, FlatHarmonicClosedForm) {
  const GreenProfile prof = solve_green(make_metric(MetricFamily::euclidean), PParam(2.0));
  EXPECT_NEAR(prof.u_at(0.5), 1.0 / (2.0 * kPi), 1e-12 / (2.0 * kPi));
  EXPECT_NEAR(prof.u_at(1.0), 1.0 / kFourPi, 1e-12 / kFourPi);
  EXPECT_NEAR(prof.du_at(1.0), -1.0 / kFourPi, 1e-14);
}

TEST(SolveGreen, FlatPOneHalfMatchesPoleModel) {
  const GreenProfile prof = solve_green(make_metric(MetricFamily::euclidean), PParam(1.5));
  const double expected = 1.0 / (48.0 * kPi * kPi);
  EXPECT_NEAR(prof.u_at(1.0), expected, 1e-10 * expected);
  // exact on flat space at every radius, not only r = 1
  for (double r : {0.01, 0.3, 2.0, 50.0}) {
    EXPECT_NEAR(prof.u_at(r), mu_model(PParam(1.5), r), 1e-11 * mu_model(PParam(1.5), r));
  }
}

TEST(SolveGreen, HyperbolicClosedForm) {
  const GreenProfile prof = solve_green(make_metric(MetricFamily::hyperbolic), PParam(2.0));
  auto exact = [](double r) { return (1.0 / std::tanh(r) - 1.0) / kFourPi; };
  for (double r : {0.3, 1.0, 2.5}) {
    EXPECT_NEAR(prof.u_at(r), exact(r), 1e-11 * exact(r)) << "r=" << r;
  }
}

TEST(SolveGreen, ParabolicInputsRejected) {
  EXPECT_THROW(solve_green(make_metric(MetricFamily::sphere), PParam(2.0)), ParabolicMetricError);
  // cap declared at p=1.5 admits alpha=0.4; probing at p=2 is parabolic
  EXPECT_THROW(solve_green(power_cap(0.4, 2.0, 1.5), PParam(2.0)), ParabolicMetricError);
}

TEST(SolveGreen, PoleIncompleteRejected) {
  const WarpedMetric table = make_metric_from_table({1.0, 2.0, 3.0, 4.0}, {1.0, 2.0, 3.0, 4.0});
  EXPECT_THROW(solve_green(table, PParam(2.0)), std::invalid_argument);
}

TEST(SolveGreen, GridMonotoneAndFluxNormalized) {
  for (const auto& metric : {make_metric(MetricFamily::euclidean), power_cap(0.8, 2.0, 1.5)}) {
    for (double pv : {1.2, 1.5, 2.0}) {
      const GreenProfile prof = solve_green(metric, PParam(pv));
      const auto& u = prof.values();
      const auto& du = prof.gradients();
      for (std::size_t i = 0; i < u.size(); ++i) {
        EXPECT_LT(du[i], 0.0);
        if (i) EXPECT_LT(u[i], u[i - 1]);
        const double flux = std::pow(-du[i], pv - 1.0) * prof.area_at(prof.grid()[i]);
        EXPECT_NEAR(flux, 1.0, 1e-12);
      }
      EXPECT_LE(prof.tail_estimate(), 1e-12 * prof.u_max() * 1.0001);
    }
  }
}

TEST(InvertLevel, ClosedFormLevels) {
  const GreenProfile prof = solve_green(make_metric(MetricFamily::euclidean), PParam(2.0));
  EXPECT_NEAR(invert_level(prof, 1.0 / kFourPi), 1.0, 1e-11);
  EXPECT_NEAR(invert_level(prof, 1.0 / (8.0 * kPi)), 2.0, 1e-11);

  const GreenProfile hyp = solve_green(make_metric(MetricFamily::hyperbolic), PParam(2.0));
  const double t1 = (1.0 / std::tanh(1.0) - 1.0) / kFourPi;
  EXPECT_NEAR(invert_level(hyp, t1), 1.0, 1e-10);
}

TEST(InvertLevel, RoundTripRandomLevels) {
  const GreenProfile prof = solve_green(power_cap(0.8, 2.0, 1.5), PParam(1.5));
  std::mt19937_64 rng(20240811);
  std::uniform_real_distribution<double> uni(std::log(prof.u_min() * 10.0),
                                             std::log(prof.u_max() / 10.0));
  for (int k = 0; k < 64; ++k) {
    const double t = std::exp(uni(rng));
    const double r = invert_level(prof, t);
    EXPECT_NEAR(prof.u_at(r), t, 1e-12 * t);
  }
  EXPECT_THROW(invert_level(prof, prof.u_max() * 2.0), std::domain_error);
  EXPECT_THROW(invert_level(prof, 0.0), std::domain_error);
}

TEST(LevelFunctionals, FlatRigidityValues) {
  const GreenProfile p2 = solve_green(make_metric(MetricFamily::euclidean), PParam(2.0));
  const LevelFunctionals a = level_functionals(p2, 1.0 / kFourPi);
  EXPECT_NEAR(a.F, 1.0 / kFourPi, 1e-11 / kFourPi);
  EXPECT_NEAR(a.M, 0.0, 1e-12);
  EXPECT_NEAR(a.flux, 1.0, 1e-12);

  const GreenProfile p15 = solve_green(make_metric(MetricFamily::euclidean), PParam(1.5));
  const double t = 1.0 / (48.0 * kPi * kPi);
  const LevelFunctionals b = level_functionals(p15, t);
  const double f_expected = 1.0 / (64.0 * kPi * kPi * kPi);
  EXPECT_NEAR(b.F, f_expected, 1e-10 * f_expected);
  EXPECT_NEAR(b.M, 0.0, 1e-10 * kFourPi * 9.0 * t);
}

// Two computation paths for F: area u'^2 against A^{(p-3)/(p-1)}.
TEST(LevelFunctionals, TwoPathFAgreement) {
  for (const auto& metric : {make_metric(MetricFamily::euclidean), power_cap(0.7, 2.0, 1.5),
                             make_metric(MetricFamily::hyperbolic)}) {
    for (double pv : {1.5, 2.0}) {
      const GreenProfile prof = solve_green(metric, PParam(pv));
      for (double t : default_levels(prof, 64)) {
        const LevelFunctionals lf = level_functionals(prof, t);
        const double alt = std::pow(lf.area, (pv - 3.0) / (pv - 1.0));
        EXPECT_NEAR(lf.F, alt, 1e-10 * alt);
        EXPECT_NEAR(lf.flux, 1.0, 1e-10);
      }
    }
  }
}

TEST(LevelFunctionals, FlatMVanishesAllP) {
  for (double pv : {1.2, 1.5, 2.0}) {
    const GreenProfile prof = solve_green(make_metric(MetricFamily::euclidean), PParam(pv));
    const double c2 = 4.0 * kPi * sqr(PParam(pv).cp());
    for (double t : default_levels(prof, 64)) {
      EXPECT_LE(std::abs(level_functionals(prof, t).M), 1e-8 * c2 * t) << "p=" << pv;
    }
  }
}

TEST(Asymptotics, FlatIsExact) {
  const GreenProfile prof = solve_green(make_metric(MetricFamily::euclidean), PParam(1.5));
  const auto rows = asymptotics_check(prof);
  ASSERT_GE(rows.size(), 8u);
  for (const auto& row : rows) {
    EXPECT_LE(row.dev_value, 1e-12);
    EXPECT_LE(row.dev_gradient, 1e-14);
    EXPECT_LE(row.dev_hessian, 1e-12);
  }
}

TEST(Asymptotics, PowerCapDecreasesTowardPole) {
  const GreenProfile prof = solve_green(power_cap(0.8, 2.0, 2.0), PParam(2.0));
  const auto rows = asymptotics_check(prof);
  ASSERT_GE(rows.size(), 8u);
  EXPECT_TRUE(asymptotics_column_decreasing(rows, &AsymptoticsRow::dev_value, 1e-14));
  EXPECT_TRUE(asymptotics_column_decreasing(rows, &AsymptoticsRow::dev_gradient, 1e-14));
  EXPECT_TRUE(asymptotics_column_decreasing(rows, &AsymptoticsRow::dev_hessian, 1e-14));
  EXPECT_LT(rows.back().dev_value, 1e-3);
}

TEST(Asymptotics, PoleEuclideanPrecondition) {
  // sinh r = r + O(r^3), so the hyperbolic metric is Euclidean at the pole
  const GreenProfile hyp = solve_green(make_metric(MetricFamily::hyperbolic), PParam(2.0));
  EXPECT_NO_THROW(asymptotics_check(hyp));
}

TEST(Csv, HeaderAndRoundTrip) {
  const GreenProfile prof = solve_green(make_metric(MetricFamily::euclidean),
                                        PParam(2.0), GridSpec{32, 1e-2, 0.0});
  std::ostringstream os;
  export_csv(prof, os);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "r,u,du,A,F,flux,M");
  std::string first;
  std::getline(is, first);
  std::istringstream row(first);
  std::string cell;
  std::getline(row, cell, ',');
  EXPECT_EQ(std::stod(cell), prof.grid().front());  // exact round trip
  std::getline(row, cell, ',');
  EXPECT_EQ(std::stod(cell), prof.values().front());
}
