#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "rcotto/verify.hpp"

using namespace rcotto;

TEST(Quadrature, WeightsOfTheTwoLevelToy) {
  // closed forms: pi/2 gap coth(beta gap / 2) and pi/2
  const double gap = 2.0, beta = 2.0;
  const verify::WeightPair w = verify::extrapolated_weights(gap, beta, 0.1);
  EXPECT_NEAR(w.chi, 0.5 * std::numbers::pi * gap / std::tanh(0.5 * beta * gap), 1e-5);
  EXPECT_NEAR(w.xi, 0.5 * std::numbers::pi, 1e-5);
}

TEST(Quadrature, NumericChiXiMatchesClosedForm) {
  std::mt19937_64 rng(61);
  const Matrix h = verify::random_hermitian(3, rng);
  const Matrix a = verify::random_hermitian(3, rng);
  const ChiXi closed = build_chi_xi(h, a, 1.4, 0.7);
  const ChiXi numeric = verify::numeric_chi_xi(h, a, 1.4, 0.7);
  EXPECT_LT(verify::relative_max_error(numeric.chi, closed.chi), 1e-4);
  EXPECT_LT(verify::relative_max_error(numeric.xi, closed.xi), 1e-4);
}

TEST(WeakCoupling, ClosedForms) {
  const TlsParams tls;
  const ReservoirTemps temps;
  const double mu_h = tls.splitting(Reservoir::hot), mu_c = tls.splitting(Reservoir::cold);
  EXPECT_NEAR(verify::weak_coupling_efficiency(tls), 1.0 - mu_c / mu_h, 1e-15);
  EXPECT_GT(verify::weak_coupling_work(tls, temps), 0.0);
  EXPECT_NEAR(verify::excited_population(1.0, 0.0), 0.5, 1e-15);
  EXPECT_LT(verify::weak_coupling_efficiency(tls), 1.0 - temps.beta_h / temps.beta_c);
}

TEST(Suites, PassOnTheImplementation) {
  verify::SuiteOptions opt;
  opt.instances = 4;
  const verify::Report r = verify::run_suites(opt);
  for (const auto& c : r.checks)
    EXPECT_EQ(c.status, verify::Status::pass) << c.suite << "/" << c.name << " " << c.value;
  EXPECT_TRUE(r.passed());
  EXPECT_GE(r.checks.size(), 10u);
}

TEST(Suites, InjectedSignErrorIsCaught) {
  verify::SuiteOptions opt;
  opt.instances = 2;
  opt.fault = verify::Fault::xi_sign;
  const verify::Report r = verify::run_suites(opt);
  EXPECT_FALSE(r.passed());
}

TEST(Suites, SmallCapSkipsEverything) {
  verify::SuiteOptions opt;
  opt.dimension_cap = 4;
  const verify::Report r = verify::run_suites(opt);
  EXPECT_TRUE(r.passed());
  ASSERT_EQ(r.checks.size(), 3u);
  for (const auto& c : r.checks) EXPECT_EQ(c.status, verify::Status::skipped);
  EXPECT_EQ(verify::to_json(r).at("checks").size(), 3u);
}
