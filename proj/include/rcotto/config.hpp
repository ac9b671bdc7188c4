#pragma once

// EngineConfig: every physical and numerical parameter of one engine run,
// with its JSON interchange form.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rcotto/model.hpp"

namespace rcotto {

enum class EngineMode { coherent, incoherent };
enum class ResetPolicy { dissipative, projective };
enum class PropagatorKind { factorized, integrator };

inline const char* to_string(EngineMode m) {
  return m == EngineMode::coherent ? "coherent" : "incoherent";
}

struct Tolerances {
  double rel_tol = 1e-8;           ///< integrator relative tolerance
  double abs_tol = 1e-10;          ///< integrator absolute tolerance
  double limit_cycle = 1e-9;       ///< trace-distance criterion between successive A states
  int max_cycles = 500;
  double positivity_floor = 1e-6;  ///< min eigenvalue may not drop below -floor
};

struct EngineConfig {
  TlsParams tls;
  SpectralDensity spectral_density;
  RcFrequencyPolicy rc_policy;
  ReservoirTemps temps;
  double tau_i = 3000.0;
  int rc_levels = 9;
  std::optional<double> gamma_d;  ///< unset: max(0.05, 20 / tau_i)
  double gamma_dep = 10.0;
  EngineMode mode = EngineMode::coherent;
  ResetPolicy reset = ResetPolicy::dissipative;
  PropagatorKind propagator = PropagatorKind::factorized;
  Tolerances tolerances;

  double resolved_gamma_d() const { return gamma_d ? *gamma_d : std::max(0.05, 20.0 / tau_i); }

  RcParams rc(Reservoir r) const { return rc_mapping(spectral_density, tls, r, rc_policy); }

  SpaceLayout layout() const { return SpaceLayout(rc_levels); }
};

/// Parameter set of the coupling-sweep figure: eps_h = 1.5, Delta_c = 1,
/// Delta_h = 1.5, w_c = 0.265, beta_h = 0.95, beta_c = 2.5, 9 RC levels.
inline EngineConfig default_config() { return EngineConfig{}; }

inline void validate(const EngineConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  const auto& t = c.tls;
  require(std::isfinite(t.eps_c) && std::isfinite(t.eps_h) && std::isfinite(t.delta_c) &&
              std::isfinite(t.delta_h),
          "tls parameters must be finite");
  require(t.strokes_commute(),
          "tls: commuting-stroke condition eps_h*delta_c == eps_c*delta_h violated");
  require(t.splitting(Reservoir::cold) < t.splitting(Reservoir::hot),
          "tls: cold splitting must be smaller than hot splitting");
  require(c.spectral_density.alpha > 0.0, "spectral_density.alpha must be > 0");
  require(c.spectral_density.omega_c > 0.0, "spectral_density.omega_c must be > 0");
  if (c.rc_policy.kind == RcPolicy::fixed_gamma)
    require(c.rc_policy.gamma > 0.0, "rc_policy.gamma must be > 0 for fixed_gamma");
  require(c.temps.beta_h > 0.0 && c.temps.beta_h < c.temps.beta_c,
          "temps: require 0 < beta_h < beta_c");
  require(c.tau_i > 0.0 && std::isfinite(c.tau_i), "tau_i must be > 0");
  require(c.rc_levels >= 2, "rc_levels must be >= 2");
  require(c.resolved_gamma_d() > 0.0, "gamma_d must be > 0");
  require(c.gamma_dep > 0.0, "gamma_dep must be > 0");
  const auto& tol = c.tolerances;
  require(tol.rel_tol > 0.0 && tol.abs_tol > 0.0, "integrator tolerances must be > 0");
  require(tol.limit_cycle > 0.0, "tolerances.limit_cycle must be > 0");
  require(tol.max_cycles > 0, "tolerances.max_cycles must be > 0");
  require(tol.positivity_floor > 0.0, "tolerances.positivity_floor must be > 0");
}

// ---------------------------------------------------------------------------
// JSON

NLOHMANN_JSON_SERIALIZE_ENUM(EngineMode, {{EngineMode::coherent, "coherent"},
                                          {EngineMode::incoherent, "incoherent"}})
NLOHMANN_JSON_SERIALIZE_ENUM(ResetPolicy, {{ResetPolicy::dissipative, "dissipative"},
                                           {ResetPolicy::projective, "projective"}})
NLOHMANN_JSON_SERIALIZE_ENUM(PropagatorKind, {{PropagatorKind::factorized, "factorized"},
                                              {PropagatorKind::integrator, "integrator"}})
NLOHMANN_JSON_SERIALIZE_ENUM(RcPolicy, {{RcPolicy::resonant, "resonant"},
                                        {RcPolicy::fixed_gamma, "fixed_gamma"}})

namespace detail {

template <class T>
T enum_from(const nlohmann::json& j, std::string_view key,
            std::initializer_list<std::pair<T, const char*>> values) {
  if (!j.is_string()) throw ConfigError(std::string(key) + ": expected a string");
  const auto s = j.get<std::string>();
  for (const auto& [v, name] : values)
    if (s == name) return v;
  throw ConfigError(std::string(key) + ": unknown value '" + s + "'");
}

inline double number(const nlohmann::json& j, std::string_view key) {
  if (!j.is_number()) throw ConfigError(std::string(key) + ": expected a number");
  return j.get<double>();
}

// Reads obj[key] into out if present; unknown keys are rejected by the caller.
inline void read_number(const nlohmann::json& obj, const char* key, double& out,
                        std::string_view path) {
  if (auto it = obj.find(key); it != obj.end()) out = number(*it, std::string(path) + key);
}

inline void reject_unknown(const nlohmann::json& obj, std::initializer_list<const char*> known,
                           std::string_view path) {
  if (!obj.is_object()) throw ConfigError(std::string(path) + ": expected an object");
  for (const auto& [k, v] : obj.items()) {
    if (std::find_if(known.begin(), known.end(), [&](const char* s) { return k == s; }) ==
        known.end())
      throw ConfigError("unknown configuration key '" + std::string(path) + k + "'");
  }
}

}  // namespace detail

inline nlohmann::json to_json(const EngineConfig& c) {
  nlohmann::json j;
  j["tls"] = {{"eps_c", c.tls.eps_c},
              {"delta_c", c.tls.delta_c},
              {"eps_h", c.tls.eps_h},
              {"delta_h", c.tls.delta_h}};
  j["spectral_density"] = {{"alpha", c.spectral_density.alpha},
                           {"omega_c", c.spectral_density.omega_c}};
  j["rc_policy"] = {{"kind", c.rc_policy.kind}, {"gamma", c.rc_policy.gamma}};
  j["temps"] = {{"beta_h", c.temps.beta_h}, {"beta_c", c.temps.beta_c}};
  j["tau_i"] = c.tau_i;
  j["rc_levels"] = c.rc_levels;
  j["gamma_d"] = c.gamma_d ? nlohmann::json(*c.gamma_d) : nlohmann::json(nullptr);
  j["gamma_dep"] = c.gamma_dep;
  j["mode"] = c.mode;
  j["reset"] = c.reset;
  j["propagator"] = c.propagator;
  j["tolerances"] = {{"rel_tol", c.tolerances.rel_tol},
                     {"abs_tol", c.tolerances.abs_tol},
                     {"limit_cycle", c.tolerances.limit_cycle},
                     {"max_cycles", c.tolerances.max_cycles},
                     {"positivity_floor", c.tolerances.positivity_floor}};
  return j;
}

/// Missing keys keep their defaults; unknown keys and type mismatches throw ConfigError.
inline EngineConfig config_from_json(const nlohmann::json& j) {
  using namespace detail;
  EngineConfig c;
  reject_unknown(j,
                 {"tls", "spectral_density", "rc_policy", "temps", "tau_i", "rc_levels", "gamma_d",
                  "gamma_dep", "mode", "reset", "propagator", "tolerances"},
                 "");
  if (auto it = j.find("tls"); it != j.end()) {
    reject_unknown(*it, {"eps_c", "delta_c", "eps_h", "delta_h"}, "tls.");
    read_number(*it, "eps_c", c.tls.eps_c, "tls.");
    read_number(*it, "delta_c", c.tls.delta_c, "tls.");
    read_number(*it, "eps_h", c.tls.eps_h, "tls.");
    read_number(*it, "delta_h", c.tls.delta_h, "tls.");
  }
  if (auto it = j.find("spectral_density"); it != j.end()) {
    reject_unknown(*it, {"alpha", "omega_c"}, "spectral_density.");
    read_number(*it, "alpha", c.spectral_density.alpha, "spectral_density.");
    read_number(*it, "omega_c", c.spectral_density.omega_c, "spectral_density.");
  }
  if (auto it = j.find("rc_policy"); it != j.end()) {
    reject_unknown(*it, {"kind", "gamma"}, "rc_policy.");
    if (auto k = it->find("kind"); k != it->end())
      c.rc_policy.kind = enum_from<RcPolicy>(
          *k, "rc_policy.kind",
          {{RcPolicy::resonant, "resonant"}, {RcPolicy::fixed_gamma, "fixed_gamma"}});
    read_number(*it, "gamma", c.rc_policy.gamma, "rc_policy.");
  }
  if (auto it = j.find("temps"); it != j.end()) {
    reject_unknown(*it, {"beta_h", "beta_c"}, "temps.");
    read_number(*it, "beta_h", c.temps.beta_h, "temps.");
    read_number(*it, "beta_c", c.temps.beta_c, "temps.");
  }
  read_number(j, "tau_i", c.tau_i, "");
  if (auto it = j.find("rc_levels"); it != j.end()) {
    if (!it->is_number_integer()) throw ConfigError("rc_levels: expected an integer");
    c.rc_levels = it->get<int>();
  }
  if (auto it = j.find("gamma_d"); it != j.end()) {
    if (it->is_null() || (it->is_string() && it->get<std::string>() == "auto"))
      c.gamma_d.reset();
    else
      c.gamma_d = number(*it, "gamma_d");
  }
  read_number(j, "gamma_dep", c.gamma_dep, "");
  if (auto it = j.find("mode"); it != j.end())
    c.mode = enum_from<EngineMode>(
        *it, "mode", {{EngineMode::coherent, "coherent"}, {EngineMode::incoherent, "incoherent"}});
  if (auto it = j.find("reset"); it != j.end())
    c.reset = enum_from<ResetPolicy>(
        *it, "reset",
        {{ResetPolicy::dissipative, "dissipative"}, {ResetPolicy::projective, "projective"}});
  if (auto it = j.find("propagator"); it != j.end())
    c.propagator = enum_from<PropagatorKind>(
        *it, "propagator",
        {{PropagatorKind::factorized, "factorized"}, {PropagatorKind::integrator, "integrator"}});
  if (auto it = j.find("tolerances"); it != j.end()) {
    reject_unknown(*it, {"rel_tol", "abs_tol", "limit_cycle", "max_cycles", "positivity_floor"},
                   "tolerances.");
    read_number(*it, "rel_tol", c.tolerances.rel_tol, "tolerances.");
    read_number(*it, "abs_tol", c.tolerances.abs_tol, "tolerances.");
    read_number(*it, "limit_cycle", c.tolerances.limit_cycle, "tolerances.");
    read_number(*it, "positivity_floor", c.tolerances.positivity_floor, "tolerances.");
    if (auto m = it->find("max_cycles"); m != it->end()) {
      if (!m->is_number_integer()) throw ConfigError("tolerances.max_cycles: expected an integer");
      c.tolerances.max_cycles = m->get<int>();
    }
  }
  return c;
}

/// Applies `key=value` with a dotted key (e.g. "tls.eps_h=1.5"). The value is
/// parsed as JSON when possible, otherwise taken as a string, and must match
/// the type already present at that key.
inline void apply_override(nlohmann::json& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));

  nlohmann::json* node = &cfg;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (!node->is_object() || !node->contains(part))
      throw ConfigError("override: unknown configuration key '" + key + "'");
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (node->is_object()) throw ConfigError("override: '" + key + "' is not a leaf value");

  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  const bool nullable = key == "gamma_d";
  const bool ok = (node->is_number() && value.is_number()) ||
                  (node->is_string() && value.is_string()) ||
                  (node->is_boolean() && value.is_boolean()) ||
                  (nullable && (value.is_number() || value.is_null() || value == "auto"));
  if (!ok) throw ConfigError("override: type mismatch for '" + key + "' (got '" + raw + "')");
  if (node->is_number_integer() && !value.is_number_integer())
    throw ConfigError("override: '" + key + "' expects an integer");
  *node = value;
}

}  // namespace rcotto
