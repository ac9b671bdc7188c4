#pragma once

// Physical parameterisation: spectral density, reaction-coordinate mapping
// and the Hamiltonian pieces of the mapped picture. Units: eps_c = hbar = k_B = 1.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "rcotto/qops.hpp"

namespace rcotto {

struct TlsParams {
  double eps_c = 1.0;
  double delta_c = 1.0;
  double eps_h = 1.5;
  double delta_h = 1.5;

  double bias(Reservoir phase) const { return phase == Reservoir::hot ? eps_h : eps_c; }
  double tunnelling(Reservoir phase) const { return phase == Reservoir::hot ? delta_h : delta_c; }
  /// mu = sqrt(eps^2 + Delta^2)
  double splitting(Reservoir phase) const { return std::hypot(bias(phase), tunnelling(phase)); }

  /// eps_h Delta_c == eps_c Delta_h, i.e. H_S at both stroke ends commute.
  bool strokes_commute(double tol = 1e-12) const {
    const double scale = std::max({1.0, std::abs(eps_h * delta_c), std::abs(eps_c * delta_h)});
    return std::abs(eps_h * delta_c - eps_c * delta_h) <= tol * scale;
  }
};

struct SpectralDensity {
  double alpha = 0.01 / std::numbers::pi;
  double omega_c = 0.265;
};

/// J(w) = alpha w w_c / (w^2 + w_c^2)
inline double spectral_density_value(const SpectralDensity& j, double omega) {
  if (omega < 0.0) throw std::domain_error("spectral density evaluated at negative frequency");
  return j.alpha * omega * j.omega_c / (omega * omega + j.omega_c * j.omega_c);
}

enum class RcPolicy { resonant, fixed_gamma };

struct RcFrequencyPolicy {
  RcPolicy kind = RcPolicy::resonant;
  double gamma = 0.0;  ///< only read by fixed_gamma
};

struct RcParams {
  double omega = 0.0;   ///< RC frequency Omega_j
  double lambda = 0.0;  ///< TLS-RC coupling lambda_j
  double gamma = 0.0;   ///< dimensionless residual coupling
};

/// Omega = 2 pi gamma w_c and lambda = sqrt(pi alpha Omega / 2). Under the
/// resonant policy gamma = mu_j / (2 pi w_c), so Omega_j = mu_j.
inline RcParams rc_mapping(const SpectralDensity& j, const TlsParams& tls, Reservoir phase,
                           const RcFrequencyPolicy& policy) {
  RcParams rc;
  rc.gamma = policy.kind == RcPolicy::resonant
                 ? tls.splitting(phase) / (2.0 * std::numbers::pi * j.omega_c)
                 : policy.gamma;
  rc.omega = 2.0 * std::numbers::pi * rc.gamma * j.omega_c;
  rc.lambda = std::sqrt(std::numbers::pi * j.alpha * rc.omega / 2.0);
  return rc;
}

struct ReservoirTemps {
  double beta_h = 0.95;
  double beta_c = 2.5;

  double beta(Reservoir r) const { return r == Reservoir::hot ? beta_h : beta_c; }
};

/// N = 1 / (exp(beta Omega) - 1)
inline double bose_occupation(double beta, double omega) {
  return 1.0 / std::expm1(beta * omega);
}

// ---------------------------------------------------------------------------

/// Which RC interaction terms are switched on.
struct CouplingSet {
  bool hot = false;
  bool cold = false;

  static CouplingSet none() { return {}; }
  static CouplingSet only(Reservoir r) {
    return r == Reservoir::hot ? CouplingSet{true, false} : CouplingSet{false, true};
  }
  bool contains(Reservoir r) const { return r == Reservoir::hot ? hot : cold; }
  int count() const { return int(hot) + int(cold); }
  bool operator==(const CouplingSet&) const = default;
};

/// H_S = (eps/2) sigma_z + (Delta/2) sigma_x on the TLS factor alone.
inline Matrix tls_hamiltonian(const TlsParams& tls, Reservoir phase) {
  return 0.5 * tls.bias(phase) * pauli_z() + 0.5 * tls.tunnelling(phase) * pauli_x();
}

inline Matrix build_H_S(const TlsParams& tls, Reservoir phase, const SpaceLayout& layout) {
  return tensor_embed(tls_hamiltonian(tls, phase), layout, Factor::tls);
}

/// H_I = -lambda sigma_z (a + a^dag)
inline Matrix build_H_I(const RcParams& rc, Reservoir reservoir, const SpaceLayout& layout) {
  const Ladder l = build_ladder(layout, reservoir);
  return -rc.lambda * build_pauli(layout, Pauli::z) * (l.annihilation + l.creation);
}

/// Omega a^dag a embedded on the RC factor of `reservoir`.
inline Matrix build_rc_energy(const RcParams& rc, Reservoir reservoir, const SpaceLayout& layout) {
  return rc.omega * tensor_embed(number_operator(layout.rc_levels()), layout, rc_factor(reservoir));
}

/// H_S' = H_S(phase) + sum_j Omega_j a_j^dag a_j + sum_{j in coupling} H_I_j
inline Matrix build_H_Sprime(const TlsParams& tls, const RcParams& rc_h, const RcParams& rc_c,
                             Reservoir phase, CouplingSet coupling, const SpaceLayout& layout) {
  Matrix h = build_H_S(tls, phase, layout) + build_rc_energy(rc_h, Reservoir::hot, layout) +
             build_rc_energy(rc_c, Reservoir::cold, layout);
  if (coupling.hot) h += build_H_I(rc_h, Reservoir::hot, layout);
  if (coupling.cold) h += build_H_I(rc_c, Reservoir::cold, layout);
  return h;
}

/// exp(-beta H) / Z, evaluated with the spectrum shifted by its ground energy.
inline Matrix thermal_state(const Matrix& h, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("thermal_state: beta must be positive");
  const EigenSystem sys = eigh(h);
  RealVector w = (-(beta) * (sys.values.array() - sys.values(0))).exp();
  w /= w.sum();
  Matrix rho = sys.vectors * w.cast<Complex>().asDiagonal() * sys.vectors.adjoint();
  return hermitize(rho);
}

/// Thermal state of Omega a^dag a on a single truncated RC factor.
inline Matrix rc_thermal_state(double omega, double beta, int levels) {
  return thermal_state(omega * number_operator(levels), beta);
}

}  // namespace rcotto
