#pragma once

// Time evolution under a constant generator: an adaptive embedded
// Runge-Kutta integrator on d x d matrices (main path), fixed-step RK4, and a
// dense exponential oracle for small dimensions.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rcotto/generators.hpp"
#include "rcotto/superop.hpp"

namespace rcotto {

enum class IntegratorMethod { adaptive_rk, fixed_rk4 };

struct IntegratorSettings {
  IntegratorMethod method = IntegratorMethod::adaptive_rk;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double max_step = std::numeric_limits<double>::infinity();
  double min_step = 1e-12;
  /// max_step is further capped at step_ceiling_factor / (largest Bohr frequency)
  double step_ceiling_factor = 0.05;
  int hermitize_every = 100;
  double positivity_floor = 1e-6;
  int positivity_samples = 10;
};

struct EvolveStats {
  long accepted = 0;
  long rejected = 0;
  long evaluations = 0;
  double min_eigenvalue = 0.0;
};

namespace detail {

inline void check_settings(const IntegratorSettings& s) {
  if (!(s.rel_tol > 0.0) || !(s.abs_tol > 0.0))
    throw std::invalid_argument("integrator tolerances must be positive");
  if (!(s.min_step < s.max_step)) throw std::invalid_argument("min_step must be < max_step");
}

inline double step_ceiling(const Generator& g, const IntegratorSettings& s) {
  double cap = s.max_step;
  if (g.frequency_bound() > 0.0) cap = std::min(cap, s.step_ceiling_factor / g.frequency_bound());
  return cap;
}

inline void check_positivity(const Matrix& rho, double t, const IntegratorSettings& s,
                             EvolveStats& stats) {
  const double lo = min_eigenvalue(rho);
  stats.min_eigenvalue = std::min(stats.min_eigenvalue, lo);
  if (lo < -s.positivity_floor) {
    std::ostringstream msg;
    msg << "positivity violated at t=" << t << ": min eigenvalue " << lo << " below -"
        << s.positivity_floor << " (trace " << rho.trace().real() << ", hermitian defect "
        << hermitian_defect(rho) << ")";
    throw NumericalError(msg.str());
  }
}

// Dormand-Prince 5(4) tableau
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

}  // namespace detail

/// rho(t) = exp(t G) rho0 by explicit Runge-Kutta on the d x d matrix.
inline Matrix evolve(const Matrix& rho0, const Generator& g, double t,
                     const IntegratorSettings& settings = {}, EvolveStats* stats_out = nullptr) {
  detail::check_settings(settings);
  if (t < 0.0) throw std::invalid_argument("evolve: negative duration");
  EvolveStats stats;
  stats.min_eigenvalue = min_eigenvalue(rho0);
  Matrix y = rho0;
  if (t == 0.0 || g.size() == 0) {
    if (stats_out) *stats_out = stats;
    return y;
  }

  const double cap = detail::step_ceiling(g, settings);
  const int samples = std::max(1, settings.positivity_samples);
  int next_sample = 1;
  auto sample_due = [&](double time) {
    while (next_sample <= samples && time >= t * next_sample / samples - 1e-15 * t) {
      detail::check_positivity(y, time, settings, stats);
      ++next_sample;
    }
  };

  if (settings.method == IntegratorMethod::fixed_rk4) {
    const double h0 = std::isfinite(cap) ? cap : t / 1000.0;
    const long steps = std::max(1L, static_cast<long>(std::ceil(t / h0)));
    const double h = t / static_cast<double>(steps);
    for (long s = 0; s < steps; ++s) {
      const Matrix k1 = g.apply(y);
      const Matrix k2 = g.apply(y + 0.5 * h * k1);
      const Matrix k3 = g.apply(y + 0.5 * h * k2);
      const Matrix k4 = g.apply(y + h * k3);
      y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      stats.evaluations += 4;
      ++stats.accepted;
      if (settings.hermitize_every > 0 && (s + 1) % settings.hermitize_every == 0)
        y = hermitize(y);
      sample_due(h * static_cast<double>(s + 1));
    }
    if (stats_out) *stats_out = stats;
    return y;
  }

  using T = detail::Dopri5;
  double time = 0.0;
  double h = std::min({cap, t, 0.01 * t + 1e-3});
  Matrix k1 = g.apply(y);
  ++stats.evaluations;
  while (time < t) {
    if (time + h > t) h = t - time;
    const Matrix k2 = g.apply(y + h * (T::a21 * k1));
    const Matrix k3 = g.apply(y + h * (T::a31 * k1 + T::a32 * k2));
    const Matrix k4 = g.apply(y + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3));
    const Matrix k5 = g.apply(y + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4));
    const Matrix k6 = g.apply(
        y + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 + T::a65 * k5));
    Matrix y_new = y + h * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 + T::b5 * k5 + T::b6 * k6);
    const Matrix k7 = g.apply(y_new);
    stats.evaluations += 6;
    const Matrix err =
        h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 + T::e7 * k7);
    const Eigen::ArrayXXd scale =
        settings.abs_tol + settings.rel_tol * y.cwiseAbs().array().max(y_new.cwiseAbs().array());
    const double err_norm = (err.cwiseAbs().array() / scale).maxCoeff();

    if (err_norm <= 1.0) {
      time += h;
      y = std::move(y_new);
      k1 = k7;
      ++stats.accepted;
      if (settings.hermitize_every > 0 && stats.accepted % settings.hermitize_every == 0) {
        y = hermitize(y);
        k1 = g.apply(y);
        ++stats.evaluations;
      }
      sample_due(time);
    } else {
      ++stats.rejected;
    }
    const double factor =
        err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
    h = std::min(cap, h * (err_norm <= 1.0 ? factor : std::min(1.0, factor)));
    if (h < settings.min_step && time < t) {
      std::ostringstream msg;
      msg << "evolve: step size underflow (h=" << h << " at t=" << time << " of " << t << ")";
      throw NumericalError(msg.str());
    }
  }
  if (stats_out) *stats_out = stats;
  return y;
}

inline constexpr int kOracleMaxDim = 32;

/// Exact propagation through the materialised d^2 x d^2 generator.
inline Matrix evolve_oracle(const Matrix& rho0, const Generator& g, double t) {
  const int d = static_cast<int>(rho0.rows());
  if (d > kOracleMaxDim)
    throw std::invalid_argument("evolve_oracle: dimension " + std::to_string(d) +
                                " exceeds the oracle cap of " + std::to_string(kOracleMaxDim));
  if (t == 0.0) return rho0;
  const Matrix prop = expm(t * materialize(g, d));
  return unvec(prop * vec(rho0), d);
}

struct StationaryResult {
  Matrix rho;
  double residual = 0.0;  ///< ||G[rho]||_max
  double time = 0.0;
  bool converged = false;
};

/// Evolves `seed` in doubling time chunks until ||G[rho]||_max <= tol or the total time exceeds `cap`.
inline StationaryResult stationary_state(const Generator& g, const Matrix& seed,
                                         const IntegratorSettings& settings = {},
                                         double tol = 1e-10, double cap = 1e4,
                                         double first_chunk = 1.0) {
  StationaryResult r{seed, max_abs(g.apply(seed)), 0.0, false};
  double chunk = first_chunk;
  while (r.residual > tol && r.time < cap) {
    r.rho = hermitize(evolve(r.rho, g, chunk, settings));
    r.time += chunk;
    r.residual = max_abs(g.apply(r.rho));
    chunk *= 2.0;
  }
  r.converged = r.residual <= tol;
  return r;
}

}  // namespace rcotto
