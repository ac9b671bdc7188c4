#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "rcotto/model.hpp"
#include "test_helpers.hpp"

using namespace rcotto;
using rcotto::testing::expect;

TEST(TlsParams, DefaultSetSatisfiesInvariants) {
  TlsParams t;
  EXPECT_TRUE(t.strokes_commute());
  EXPECT_NEAR(t.splitting(Reservoir::cold), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(t.splitting(Reservoir::hot), 1.5 * std::sqrt(2.0), 1e-15);
  t.delta_h = 1.4;
  EXPECT_FALSE(t.strokes_commute());
}

TEST(TlsHamiltonian, EigenvaluesAreHalfSplitting) {
  const RealVector e = hermitian_eigenvalues(tls_hamiltonian({}, Reservoir::cold));
  EXPECT_NEAR(e(0), -std::sqrt(2.0) / 2.0, 1e-14);
  EXPECT_NEAR(e(1), std::sqrt(2.0) / 2.0, 1e-14);
}

TEST(TlsHamiltonian, StrokeEndpointsCommute) {
  const Matrix hc = tls_hamiltonian({}, Reservoir::cold), hh = tls_hamiltonian({}, Reservoir::hot);
  EXPECT_LT(max_abs(commutator(hc, hh)), 1e-15);
}

TEST(SpectralDensity, PeakAtCutoff) {
  SpectralDensity j{0.3, 0.7};
  EXPECT_NEAR(spectral_density_value(j, j.omega_c), j.alpha / 2.0, 1e-15);
  for (double w : {0.1, 0.5, 0.69, 0.71, 1.5, 4.0})
    EXPECT_LT(spectral_density_value(j, w), j.alpha / 2.0);
  EXPECT_EQ(spectral_density_value(j, 0.0), 0.0);
  EXPECT_THROW(spectral_density_value(j, -1.0), std::domain_error);
}

TEST(RcMapping, ResonantColdPhase) {
  const RcParams rc = rc_mapping({}, {}, Reservoir::cold, {});
  EXPECT_NEAR(rc.omega, std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(rc.gamma, std::sqrt(2.0) / (2.0 * std::numbers::pi * 0.265), 1e-14);
  EXPECT_NEAR(rc.gamma, 0.8493, 1e-4);
  EXPECT_NEAR(rc.lambda, std::sqrt(std::numbers::pi * (0.01 / std::numbers::pi) * rc.omega / 2.0),
              1e-15);
}

TEST(RcMapping, FixedGammaRelations) {
  SpectralDensity j{0.02, 0.4};
  const RcParams rc = rc_mapping(j, {}, Reservoir::hot, {RcPolicy::fixed_gamma, 1.7});
  EXPECT_NEAR(rc.omega, 2.0 * std::numbers::pi * 1.7 * 0.4, 1e-14);
  EXPECT_NEAR(rc.lambda * rc.lambda, std::numbers::pi * 0.02 * rc.omega / 2.0, 1e-14);
}

TEST(BoseOccupation, MatchesTruncatedGeometricSeries) {
  const double beta = 2.5, omega = std::sqrt(2.0);
  const double x = std::exp(-beta * omega);
  double num = 0.0, den = 0.0;
  for (int k = 0; k < 200; ++k) {
    num += k * std::pow(x, k);
    den += std::pow(x, k);
  }
  EXPECT_NEAR(bose_occupation(beta, omega), num / den, 1e-14);
  EXPECT_NEAR(bose_occupation(beta, omega), 0.03002, 1e-5);
  EXPECT_GT(bose_occupation(1.0, 1.0), bose_occupation(2.0, 1.0));
}

TEST(ThermalState, RcOccupationConvergesWithTruncation) {
  const double beta = 2.5, omega = std::sqrt(2.0);
  const double n_exact = bose_occupation(beta, omega);
  const Matrix rho = rc_thermal_state(omega, beta, 30);
  EXPECT_NEAR(expect(number_operator(30), rho).real(), n_exact, 1e-12);
  const Matrix rho9 = rc_thermal_state(omega, beta, 9);
  EXPECT_NEAR(expect(number_operator(9), rho9).real(), n_exact, 1e-6);
}

TEST(ThermalState, GibbsWeights) {
  Matrix h = Matrix::Zero(2, 2);
  h(0, 0) = 1.0;
  h(1, 1) = -1.0;
  const Matrix rho = thermal_state(h, 0.5);
  EXPECT_NEAR(rho(0, 0).real() / rho(1, 1).real(), std::exp(-1.0), 1e-14);
  EXPECT_NEAR(rho.trace().real(), 1.0, 1e-15);
}

TEST(Builders, HSprimeIsSumOfRequestedTerms) {
  SpaceLayout l(4);
  const TlsParams tls;
  const RcParams rh = rc_mapping({}, tls, Reservoir::hot, {});
  const RcParams rcc = rc_mapping({}, tls, Reservoir::cold, {});
  const Matrix h = build_H_Sprime(tls, rh, rcc, Reservoir::hot, CouplingSet::only(Reservoir::hot), l);
  EXPECT_LT(hermitian_defect(h), 1e-15);
  const Matrix base = build_H_S(tls, Reservoir::hot, l) + build_rc_energy(rh, Reservoir::hot, l) +
                      build_rc_energy(rcc, Reservoir::cold, l);
  EXPECT_LT(max_abs(h - base - build_H_I(rh, Reservoir::hot, l)), 1e-15);
  const Matrix h0 = build_H_Sprime(tls, rh, rcc, Reservoir::hot, CouplingSet::none(), l);
  EXPECT_LT(max_abs(h0 - base), 1e-15);
}

TEST(Builders, InteractionElements) {
  SpaceLayout l(3);
  RcParams rc{1.0, 0.25, 0.0};
  const Matrix hi = build_H_I(rc, Reservoir::cold, l);
  // <s=0, h=0, c=1| H_I |s=0, h=0, c=0> = -lambda * (+1) * 1
  EXPECT_NEAR(hi(1, 0).real(), -0.25, 1e-15);
  // TLS down: sign flips, <c=2|a^dag|c=1> = sqrt 2
  EXPECT_NEAR(hi(9 + 2, 9 + 1).real(), 0.25 * std::sqrt(2.0), 1e-15);
}

TEST(Builders, ThermalRcHasNoCouplingEnergy) {
  SpaceLayout l(9);
  const RcParams rh = rc_mapping({}, {}, Reservoir::hot, {});
  const Matrix rho = kron(kron(thermal_state(tls_hamiltonian({}, Reservoir::hot), 0.95),
                               rc_thermal_state(rh.omega, 0.95, 9)),
                          rc_thermal_state(1.0, 2.5, 9));
  EXPECT_LT(std::abs(expect(build_H_I(rh, Reservoir::hot, l), rho)), 1e-12);
}
