#pragma once

// Small-instance equivalence suites: closed forms and fast paths against
// brute-force references.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "rcotto/engine.hpp"
#include "rcotto/generators.hpp"
#include "rcotto/propagate.hpp"

namespace rcotto::verify {

// ---------------------------------------------------------------------------
// Random instances

inline Matrix random_hermitian(int d, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix x(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) x(i, j) = Complex(g(rng), g(rng));
  return 0.5 * (x + x.adjoint());
}

/// Full-rank random density matrix G G^dagger / tr.
inline Matrix random_density_matrix(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix x(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) x(i, j) = Complex(g(rng), g(rng));
  Matrix rho = x * x.adjoint();
  return rho / rho.trace();
}

// ---------------------------------------------------------------------------
// chi / Xi by regulated double integral
//
// chi = gamma int_0^inf dtau int_0^inf dw w coth(beta w / 2) cos(w tau) A(-tau)
// Xi  = gamma int_0^inf dtau int_0^inf dw cos(w tau) [H, A(-tau)]
// with A(-tau)_mn = A_mn exp(-i xi_mn tau). Only the cos(xi tau) half of the
// phase is kept (the sine half is the principal-value part). A Gaussian
// exp(-(eta tau)^2 / 2) makes the tau integral converge; eta -> 0 by Richardson.

/// int_0^Wmax dw f(w) int_0^T dtau cos(w tau) cos(xi tau) exp(-(eta tau)^2/2), both numerically.
template <class F>
double regulated_weight(F f, double gap, double eta) {
  using boost::math::quadrature::gauss_kronrod;
  const double a = std::abs(gap);
  const double t_max = 9.0 / eta;
  auto inner = [&](double w) {
    auto integrand = [&](double tau) {
      return std::cos(w * tau) * std::cos(a * tau) * std::exp(-0.5 * eta * eta * tau * tau);
    };
    return gauss_kronrod<double, 61>::integrate(integrand, 0.0, t_max, 20, 1e-13);
  };
  auto outer = [&](double w) { return f(w) * inner(w); };
  const double w_max = a + 10.0 * eta;
  if (a > 0.0) {
    return gauss_kronrod<double, 31>::integrate(outer, 0.0, a, 12, 1e-12) +
           gauss_kronrod<double, 31>::integrate(outer, a, w_max, 12, 1e-12);
  }
  return gauss_kronrod<double, 31>::integrate(outer, 0.0, w_max, 12, 1e-12);
}

struct WeightPair {
  double chi = 0.0;  ///< multiplies gamma A_mn
  double xi = 0.0;   ///< multiplies gamma xi_mn A_mn
};

inline WeightPair regulated_weights(double gap, double beta, double eta) {
  auto w_coth = [beta](double w) {
    if (w < 1e-8) return 2.0 / beta;
    return w / std::tanh(0.5 * beta * w);
  };
  auto one = [](double) { return 1.0; };
  return {regulated_weight(w_coth, gap, eta), regulated_weight(one, gap, eta)};
}

/// Richardson step on eta and eta/2, assuming an even expansion in eta.
inline WeightPair extrapolated_weights(double gap, double beta, double eta) {
  const WeightPair coarse = regulated_weights(gap, beta, eta);
  const WeightPair fine = regulated_weights(gap, beta, 0.5 * eta);
  return {(4.0 * fine.chi - coarse.chi) / 3.0, (4.0 * fine.xi - coarse.xi) / 3.0};
}

/// chi and Xi assembled from numerically integrated weights. The eigenbasis
/// comes straight from Eigen; equal gaps share one quadrature.
inline ChiXi numeric_chi_xi(const Matrix& h, const Matrix& a, double beta, double gamma,
                            double eta = 0.1) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const Matrix& v = es.eigenvectors();
  const RealVector& e = es.eigenvalues();
  const int d = static_cast<int>(h.rows());
  const Matrix ae = v.adjoint() * a * v;
  std::vector<std::pair<double, WeightPair>> cache;
  auto weights = [&](double gap) {
    const double key = std::abs(gap) < 1e-12 ? 0.0 : std::abs(gap);
    for (const auto& [k, w] : cache)
      if (std::abs(k - key) <= 1e-12 * std::max(1.0, key)) return w;
    cache.emplace_back(key, extrapolated_weights(key, beta, eta));
    return cache.back().second;
  };
  Matrix chi_e(d, d), xi_e(d, d);
  for (int n = 0; n < d; ++n)
    for (int m = 0; m < d; ++m) {
      const double gap = e(m) - e(n);
      const WeightPair w = weights(gap);
      chi_e(m, n) = gamma * w.chi * ae(m, n);
      xi_e(m, n) = gamma * w.xi * gap * ae(m, n);
    }
  return {v * chi_e * v.adjoint(), v * xi_e * v.adjoint()};
}

// ---------------------------------------------------------------------------
// Weak-coupling Otto cycle

/// Excited-state population of a two-level system with splitting mu at beta.
inline double excited_population(double beta, double mu) { return 1.0 / (1.0 + std::exp(beta * mu)); }

/// Work output of the ideal two-level Otto cycle with fully thermalizing isochores.
inline double weak_coupling_work(const TlsParams& tls, const ReservoirTemps& temps) {
  const double mu_h = tls.splitting(Reservoir::hot);
  const double mu_c = tls.splitting(Reservoir::cold);
  return (mu_h - mu_c) *
         (excited_population(temps.beta_h, mu_h) - excited_population(temps.beta_c, mu_c));
}

inline double weak_coupling_efficiency(const TlsParams& tls) {
  return 1.0 - tls.splitting(Reservoir::cold) / tls.splitting(Reservoir::hot);
}

/// Configuration of the weak-coupling limit: 5 RC levels, alpha = 1e-5/pi, eps_c tau_i = 1e7.
inline EngineConfig weak_coupling_config() {
  EngineConfig c = default_config();
  c.spectral_density.alpha = 1e-5 / std::numbers::pi;
  c.rc_levels = 5;
  c.tau_i = 1e7;
  return c;
}

// ---------------------------------------------------------------------------
// Suites

enum class Status { pass, fail, skipped };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::pass: return "pass";
    case Status::fail: return "fail";
    case Status::skipped: return "skipped";
  }
  return "?";
}

struct Check {
  std::string suite;
  std::string name;
  Status status = Status::skipped;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct Report {
  std::vector<Check> checks;

  bool passed() const {
    for (const auto& c : checks)
      if (c.status == Status::fail) return false;
    return true;
  }
};

inline nlohmann::json to_json(const Report& r) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"suite", c.suite},
                      {"name", c.name},
                      {"status", to_string(c.status)},
                      {"value", c.value},
                      {"tolerance", c.tolerance},
                      {"detail", c.detail}});
  return {{"passed", r.passed()}, {"checks", checks}};
}

enum class Fault { none, xi_sign };

struct SuiteOptions {
  int dimension_cap = kOracleMaxDim;
  int instances = 20;
  std::uint64_t seed = 20240611;
  Fault fault = Fault::none;
};

inline constexpr int kMinSuiteDim = 8;

inline Check make_check(std::string suite, std::string name, double value, double tol,
                        std::string detail = {}) {
  return {std::move(suite), std::move(name), value <= tol ? Status::pass : Status::fail, value,
          tol, std::move(detail)};
}

inline double relative_max_error(const Matrix& got, const Matrix& ref) {
  return max_abs(got - ref) / std::max(max_abs(ref), 1e-300);
}

/// Isochore generators of randomized small engines against the exact exponential.
inline std::vector<Check> propagation_suite(const SuiteOptions& opt) {
  std::vector<Check> out;
  const int cap = std::min(opt.dimension_cap, kOracleMaxDim);
  std::vector<int> levels;
  for (int n = 2; 2 * n * n <= cap; ++n) levels.push_back(n);
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < opt.instances; ++i) {
    // mostly the cheap sizes; the largest one every fifth instance
    const std::size_t cheap = std::max<std::size_t>(1, levels.size() - 1);
    const int n = (i % 5 == 4) ? levels.back() : levels[i % cheap];
    EngineConfig c = default_config();
    const double scale = 1.2 + 0.6 * u(rng);
    c.tls.delta_c = 0.5 + u(rng);
    c.tls.eps_h = scale * c.tls.eps_c;
    c.tls.delta_h = scale * c.tls.delta_c;
    c.spectral_density.alpha = std::pow(10.0, -2.5 + 2.0 * u(rng));
    c.spectral_density.omega_c = 0.2 + 0.5 * u(rng);
    c.temps.beta_h = 0.5 + 0.8 * u(rng);
    c.temps.beta_c = c.temps.beta_h + 0.5 + 2.0 * u(rng);
    c.rc_levels = n;
    c.gamma_d = 0.1 + u(rng);
    c.gamma_dep = 0.2 + 2.0 * u(rng);
    const Reservoir j = u(rng) < 0.5 ? Reservoir::hot : Reservoir::cold;
    const bool dephasing = i % 2 == 0;
    const double t = 0.5 + 2.5 * u(rng);
    const Generator g = segment_generator({CouplingSet::only(j), dephasing, t}, c);
    const Matrix rho0 = random_density_matrix(c.layout().total_dim(), rng);

    IntegratorSettings s;
    s.rel_tol = 1e-11;
    s.abs_tol = 1e-13;
    s.positivity_floor = 1e9;  // Redfield-type maps need not be positive on arbitrary states
    const Matrix fast = evolve(rho0, g, t, s);
    const Matrix exact = evolve_oracle(rho0, g, t);
    std::string detail = "d=" + std::to_string(c.layout().total_dim()) + " reservoir=" +
                         to_string(j) + (dephasing ? " dephasing" : "") + " parts=" +
                         std::to_string(g.size());
    out.push_back(make_check("propagation", "instance " + std::to_string(i),
                             trace_distance(fast, exact), 1e-8, std::move(detail)));
  }
  return out;
}

/// Closed-form chi/Xi against the regulated double integral on 2- and 4-level toys.
inline std::vector<Check> chi_xi_suite(const SuiteOptions& opt) {
  struct Toy {
    std::string name;
    Matrix h, a;
    double beta, gamma;
  };
  std::vector<Toy> toys;
  {
    Matrix h = Matrix::Zero(2, 2);
    h(0, 0) = 1.0;
    h(1, 1) = -1.0;
    toys.push_back({"2-level diag(1,-1), sigma_x", h, pauli_x(), 1.0, 1.0});
  }
  std::mt19937_64 rng(opt.seed + 1);
  toys.push_back({"4-level random", random_hermitian(4, rng), random_hermitian(4, rng), 0.7, 0.3});
  {
    // TLS (x) 2-level RC with a resonant coupling: contains a degenerate gap pair
    const Matrix h = kron(tls_hamiltonian({}, Reservoir::cold), identity(2)) +
                     std::sqrt(2.0) * kron(identity(2), number_operator(2)) -
                     0.2 * kron(pauli_z(), annihilation(2) + annihilation(2).adjoint());
    const Matrix a = kron(identity(2), annihilation(2) + annihilation(2).adjoint());
    toys.push_back({"4-level TLS+RC", h, a, 2.5, 0.85});
  }
  {
    Matrix h = Matrix::Zero(4, 4);
    h(0, 0) = 0.5;
    h(1, 1) = 0.5;
    h(2, 2) = -0.3;
    h(3, 3) = 1.1;
    toys.push_back({"4-level degenerate", h, random_hermitian(4, rng), 1.3, 0.5});
  }

  std::vector<Check> out;
  for (const auto& toy : toys) {
    ChiXi closed = build_chi_xi(toy.h, toy.a, toy.beta, toy.gamma);
    if (opt.fault == Fault::xi_sign) closed.xi = -closed.xi;
    const ChiXi ref = numeric_chi_xi(toy.h, toy.a, toy.beta, toy.gamma);
    out.push_back(make_check("chi_xi", "chi " + toy.name, relative_max_error(closed.chi, ref.chi),
                             1e-4));
    out.push_back(
        make_check("chi_xi", "Xi " + toy.name, relative_max_error(closed.xi, ref.xi), 1e-4));
  }
  return out;
}

/// The engine at vanishing coupling and saturating isochores against two-level Otto algebra.
inline std::vector<Check> weak_coupling_suite(const SuiteOptions&) {
  const EngineConfig c = weak_coupling_config();
  const EngineResult r = run_engine(c);
  const double w_ref = weak_coupling_work(c.tls, c.temps);
  const double eta_ref = weak_coupling_efficiency(c.tls);
  std::vector<Check> out;
  out.push_back(make_check("weak_coupling", "efficiency",
                           r.metrics.eta ? std::abs(*r.metrics.eta - eta_ref) : INFINITY, 1e-2,
                           "reference " + std::to_string(eta_ref)));
  out.push_back(make_check("weak_coupling", "work",
                           std::abs(r.metrics.W_out - w_ref) / std::abs(w_ref), 1e-3,
                           "reference " + std::to_string(w_ref)));
  return out;
}

inline Report run_suites(const SuiteOptions& opt) {
  Report r;
  if (opt.dimension_cap < kMinSuiteDim) {
    for (const char* suite : {"propagation", "chi_xi", "weak_coupling"})
      r.checks.push_back({suite, "all", Status::skipped, 0.0, 0.0,
                          "dimension cap " + std::to_string(opt.dimension_cap) + " below " +
                              std::to_string(kMinSuiteDim)});
    return r;
  }
  for (auto&& c : propagation_suite(opt)) r.checks.push_back(std::move(c));
  for (auto&& c : chi_xi_suite(opt)) r.checks.push_back(std::move(c));
  for (auto&& c : weak_coupling_suite(opt)) r.checks.push_back(std::move(c));
  return r;
}

}  // namespace rcotto::verify
