#pragma once

// Parameter sweeps over coupling strength or isochore time, CSV output and the
// data sets behind the figure panels.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "rcotto/config.hpp"
#include "rcotto/engine.hpp"

namespace rcotto {

enum class SweepAxis { alpha, tau_i };

NLOHMANN_JSON_SERIALIZE_ENUM(SweepAxis, {{SweepAxis::alpha, "alpha"}, {SweepAxis::tau_i, "tau_i"}})

inline const char* to_string(SweepAxis a) { return a == SweepAxis::alpha ? "alpha" : "tau_i"; }

struct SweepSpec {
  EngineConfig base;
  SweepAxis axis = SweepAxis::alpha;
  std::vector<double> grid;
  std::vector<EngineMode> modes{EngineMode::coherent};
  std::string output;  ///< CSV path; the manifest goes next to it
};

struct SweepRow {
  SweepAxis axis = SweepAxis::alpha;
  double axis_value = 0.0;
  EngineMode mode = EngineMode::coherent;
  std::optional<CycleMetrics> metrics;  ///< empty for a failed point
  std::string error;
  std::vector<std::string> warnings;

  bool ok() const { return metrics.has_value(); }
};

/// Resolves one grid point into a full engine configuration.
inline EngineConfig point_config(const SweepSpec& spec, double value, EngineMode mode) {
  EngineConfig c = spec.base;
  if (spec.axis == SweepAxis::alpha) c.spectral_density.alpha = value;
  else c.tau_i = value;
  c.mode = mode;
  return c;
}

inline void validate(const SweepSpec& spec) {
  if (spec.grid.empty()) throw ConfigError("sweep grid is empty");
  if (spec.modes.empty()) throw ConfigError("sweep needs at least one mode");
  for (std::size_t i = 0; i < spec.grid.size(); ++i) {
    if (!(spec.grid[i] > 0.0) || !std::isfinite(spec.grid[i]))
      throw ConfigError("sweep grid values must be positive and finite");
    if (i > 0 && !(spec.grid[i] > spec.grid[i - 1]))
      throw ConfigError("sweep grid must be strictly increasing");
  }
  for (std::size_t i = 1; i < spec.modes.size(); ++i)
    if (std::find(spec.modes.begin(), spec.modes.begin() + i, spec.modes[i]) !=
        spec.modes.begin() + i)
      throw ConfigError("sweep modes must be distinct");
  for (double v : spec.grid)
    for (EngineMode m : spec.modes) validate(point_config(spec, v, m));
}

inline unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Runs every (grid point, mode) pair on up to `workers` threads. Failed points
/// become error rows. Rows come back sorted by (axis_value, mode).
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec, unsigned workers = default_workers()) {
  validate(spec);
  std::vector<SweepRow> rows;
  for (double v : spec.grid)
    for (EngineMode m : spec.modes) rows.push_back({spec.axis, v, m, std::nullopt, {}, {}});

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      SweepRow& row = rows[i];
      try {
        EngineResult r = run_engine(point_config(spec, row.axis_value, row.mode));
        row.metrics = r.metrics;
        row.warnings = std::move(r.warnings);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(rows.size())));
  if (n == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.axis_value != b.axis_value) return a.axis_value < b.axis_value;
    return static_cast<int>(a.mode) < static_cast<int>(b.mode);
  });
  return rows;
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr const char* kCsvHeader =
    "axis_name,axis_value,mode,W_out,Q,eta,P,C_h,C_c,W_hot_adiabat,W_cold_adiabat,"
    "pop_diff_B,pop_diff_D,coherence_B,coherence_D,n_cycles,residual";

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

/// One CSV line without the newline. Undefined values (eta with Q <= 0, every
/// metric of a failed point) are left empty.
inline std::string csv_line(const SweepRow& r) {
  std::string s = std::string(to_string(r.axis)) + "," + format_number(r.axis_value) + "," +
                  to_string(r.mode);
  auto put = [&s](std::optional<double> v) {
    s += ',';
    if (v) s += format_number(*v);
  };
  const auto& m = r.metrics;
  if (!m) {
    for (int i = 0; i < 14; ++i) s += ',';
    return s;
  }
  put(m->W_out);
  put(m->Q);
  put(m->eta);
  put(m->P);
  put(m->C_h);
  put(m->C_c);
  put(m->W_hot_adiabat);
  put(m->W_cold_adiabat);
  put(m->pop_diff_B);
  put(m->pop_diff_D);
  put(m->coherence_B);
  put(m->coherence_D);
  s += ',' + std::to_string(m->n_cycles);
  put(m->residual);
  return s;
}

inline std::string to_csv(const std::vector<SweepRow>& rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) out += csv_line(r) + "\n";
  return out;
}

inline nlohmann::json metrics_to_json(const CycleMetrics& m) {
  return {{"W_out", m.W_out},
          {"Q", m.Q},
          {"eta", m.eta ? nlohmann::json(*m.eta) : nlohmann::json(nullptr)},
          {"P", m.P},
          {"C_h", m.C_h},
          {"C_c", m.C_c},
          {"W_hot_adiabat", m.W_hot_adiabat},
          {"W_cold_adiabat", m.W_cold_adiabat},
          {"pop_diff_B", m.pop_diff_B},
          {"pop_diff_D", m.pop_diff_D},
          {"coherence_B", m.coherence_B},
          {"coherence_D", m.coherence_D},
          {"n_cycles", m.n_cycles},
          {"residual", m.residual},
          {"diagnostics",
           {{"first_law_residual", m.first_law_residual},
            {"retherm_distance", m.retherm_distance},
            {"recoupling_cost", m.recoupling_cost},
            {"min_eigenvalue", m.min_eigenvalue}}}};
}

inline nlohmann::json sweep_manifest(const SweepSpec& spec, const std::vector<SweepRow>& rows) {
  nlohmann::json errors = nlohmann::json::array();
  nlohmann::json warnings = nlohmann::json::array();
  for (const auto& r : rows) {
    if (!r.ok())
      errors.push_back({{"axis_value", r.axis_value}, {"mode", r.mode}, {"error", r.error}});
    for (const auto& w : r.warnings)
      warnings.push_back({{"axis_value", r.axis_value}, {"mode", r.mode}, {"warning", w}});
  }
  return {{"tool", "rcotto"},
          {"version", RCOTTO_VERSION},
          {"axis", spec.axis},
          {"grid", spec.grid},
          {"modes", spec.modes},
          {"base_config", to_json(spec.base)},
          {"csv", std::filesystem::path(spec.output).filename().string()},
          {"rows", rows.size()},
          {"errors", errors},
          {"warnings", warnings}};
}

inline std::string manifest_path(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension(".manifest.json");
  return p.string();
}

inline void write_text(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path);
}

/// Writes the CSV and its manifest; returns the manifest path.
inline std::string write_sweep(const SweepSpec& spec, const std::vector<SweepRow>& rows) {
  write_text(spec.output, to_csv(rows));
  const std::string mpath = manifest_path(spec.output);
  write_text(mpath, sweep_manifest(spec, rows).dump(2) + "\n");
  return mpath;
}

// ---------------------------------------------------------------------------
// Sweep spec files
//
// {"axis": "alpha", "grid": [...], "modes": ["coherent"], "output": "x.csv",
//  "config": {...}}  or  "grid": {"log_from": a, "log_to": b, "points": n}

inline std::vector<double> log_grid(double from, double to, int points) {
  if (points < 1 || !(from > 0.0) || !(to >= from))
    throw ConfigError("log grid needs 0 < from <= to and points >= 1");
  std::vector<double> g;
  if (points == 1) return {from};
  for (int i = 0; i < points; ++i)
    g.push_back(from * std::pow(to / from, static_cast<double>(i) / (points - 1)));
  return g;
}

inline SweepSpec sweep_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("sweep spec must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (k != "axis" && k != "grid" && k != "modes" && k != "output" && k != "config")
      throw ConfigError("sweep spec: unknown key '" + k + "'");
  SweepSpec s;
  try {
    if (j.contains("config")) s.base = config_from_json(j.at("config"));
    const std::string axis = j.at("axis").get<std::string>();
    if (axis == "alpha") s.axis = SweepAxis::alpha;
    else if (axis == "tau_i") s.axis = SweepAxis::tau_i;
    else throw ConfigError("sweep spec: axis must be 'alpha' or 'tau_i'");
    const auto& g = j.at("grid");
    if (g.is_array()) {
      s.grid = g.get<std::vector<double>>();
    } else if (g.is_object()) {
      s.grid = log_grid(g.at("log_from").get<double>(), g.at("log_to").get<double>(),
                        g.at("points").get<int>());
    } else {
      throw ConfigError("sweep spec: grid must be a list or a log_from/log_to/points object");
    }
    if (j.contains("modes")) {
      s.modes.clear();
      for (const auto& m : j.at("modes")) {
        const std::string name = m.get<std::string>();
        if (name == "coherent") s.modes.push_back(EngineMode::coherent);
        else if (name == "incoherent") s.modes.push_back(EngineMode::incoherent);
        else throw ConfigError("sweep spec: unknown mode '" + name + "'");
      }
    }
    if (j.contains("output")) s.output = j.at("output").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("sweep spec: ") + e.what());
  }
  return s;
}

// ---------------------------------------------------------------------------
// Figure data sets

enum class Figure { fig1a, fig1b, fig2, fig3, fig4 };

inline const char* to_string(Figure f) {
  switch (f) {
    case Figure::fig1a: return "fig1a";
    case Figure::fig1b: return "fig1b";
    case Figure::fig2: return "fig2";
    case Figure::fig3: return "fig3";
    case Figure::fig4: return "fig4";
  }
  return "?";
}

inline Figure figure_from_string(std::string_view s) {
  for (Figure f : {Figure::fig1a, Figure::fig1b, Figure::fig2, Figure::fig3, Figure::fig4})
    if (s == to_string(f)) return f;
  throw ConfigError("unknown figure '" + std::string(s) + "' (expected fig1a..fig4)");
}

/// Grids used by the figure data sets. Couplings are given as pi*alpha.
struct FigureGrids {
  std::vector<double> coupling = log_grid(1e-3, 0.2, 24);
  double coupling_tau_i = 3000.0;
  std::vector<double> tau_i = log_grid(10.0, 3e4, 24);
  double tau_coupling = 0.01;
  std::vector<double> fig3_couplings{0.003, 0.01, 0.03};
};

struct FigureFile {
  std::string panel;  ///< e.g. "fig3_pialpha_0.01"
  SweepSpec spec;
  std::string csv;
  std::string manifest;
  std::size_t errors = 0;
};

/// Sweep specs of one figure; output paths are inside `dir`.
inline std::vector<std::pair<std::string, SweepSpec>> figure_specs(Figure which,
                                                                  const EngineConfig& base,
                                                                  const std::string& dir,
                                                                  const FigureGrids& grids = {}) {
  auto path = [&dir](const std::string& name) {
    return (std::filesystem::path(dir) / (name + ".csv")).string();
  };
  auto tau_sweep = [&](double pi_alpha, std::vector<EngineMode> modes) {
    SweepSpec s;
    s.base = base;
    s.base.spectral_density.alpha = pi_alpha / std::numbers::pi;
    s.axis = SweepAxis::tau_i;
    s.grid = grids.tau_i;
    s.modes = std::move(modes);
    return s;
  };
  const std::vector<EngineMode> both{EngineMode::coherent, EngineMode::incoherent};
  std::vector<std::pair<std::string, SweepSpec>> out;
  switch (which) {
    case Figure::fig1a: {
      SweepSpec s;
      s.base = base;
      s.base.tau_i = grids.coupling_tau_i;
      s.axis = SweepAxis::alpha;
      for (double x : grids.coupling) s.grid.push_back(x / std::numbers::pi);
      s.modes = {EngineMode::coherent};
      out.emplace_back("fig1a", s);
      break;
    }
    case Figure::fig1b:
      out.emplace_back("fig1b", tau_sweep(grids.tau_coupling, {EngineMode::coherent}));
      break;
    case Figure::fig2:
      out.emplace_back("fig2", tau_sweep(grids.tau_coupling, both));
      break;
    case Figure::fig3:
      for (double x : grids.fig3_couplings)
        out.emplace_back("fig3_pialpha_" + format_number(x), tau_sweep(x, both));
      break;
    case Figure::fig4:
      out.emplace_back("fig4", tau_sweep(grids.tau_coupling, both));
      break;
  }
  for (auto& [name, s] : out) s.output = path(name);
  return out;
}

/// Runs and writes every panel of `which`. Point failures are recorded in the
/// manifests rather than thrown.
inline std::vector<FigureFile> figure_datasets(Figure which, const EngineConfig& base,
                                               const std::string& dir,
                                               unsigned workers = default_workers(),
                                               const FigureGrids& grids = {}) {
  std::vector<FigureFile> files;
  for (auto& [name, spec] : figure_specs(which, base, dir, grids)) {
    const auto rows = run_sweep(spec, workers);
    FigureFile f{name, spec, spec.output, write_sweep(spec, rows), 0};
    for (const auto& r : rows) f.errors += r.ok() ? 0 : 1;
    files.push_back(std::move(f));
  }
  return files;
}

}  // namespace rcotto
