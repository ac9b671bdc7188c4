// rcotto: run single engines, sweeps, the oracle suites and the figure data sets.
//
//   rcotto simulate [--config cfg.json] [--set key=value]... [--mode incoherent] [--out m.json]
//   rcotto sweep spec.json [--out sweep.csv] [--workers N] [--strict]
//   rcotto oracle [--dim-cap 32] [--instances 20]
//   rcotto export-figures fig1a|fig1b|fig2|fig3|fig4|all [--out-dir figures]
//
// Exit codes: 0 ok, 1 configuration error, 2 numerical failure, 3 oracle failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rcotto/rcotto.hpp"

namespace {

using nlohmann::json;
using namespace rcotto;

constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitOracle = 3;

json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open '" + path + "'");
  json j = json::parse(f, nullptr, false);
  if (j.is_discarded()) throw ConfigError("'" + path + "' is not valid JSON");
  return j;
}

/// File (or defaults), then --mode, then --set overrides in order.
EngineConfig resolve_config(const std::string& path, const std::optional<std::string>& mode,
                            const std::vector<std::string>& overrides) {
  json j = path.empty() ? to_json(default_config()) : to_json(config_from_json(read_json_file(path)));
  if (mode) apply_override(j, "mode=" + *mode);
  for (const auto& o : overrides) apply_override(j, o);
  EngineConfig c = config_from_json(j);
  validate(c);
  return c;
}

/// --workers, then RCOTTO_WORKERS, then the spec file, then the hardware.
unsigned resolve_workers(int flag, std::optional<int> from_file) {
  if (flag > 0) return static_cast<unsigned>(flag);
  if (const char* env = std::getenv("RCOTTO_WORKERS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw ConfigError("RCOTTO_WORKERS must be a positive integer");
    return static_cast<unsigned>(v);
  }
  if (from_file) {
    if (*from_file < 1) throw ConfigError("workers must be a positive integer");
    return static_cast<unsigned>(*from_file);
  }
  return default_workers();
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") std::cout << text;
  else write_text(out, text);
}

int cmd_simulate(const std::string& config, const std::optional<std::string>& mode,
                 const std::vector<std::string>& overrides, const std::string& out) {
  const EngineConfig c = resolve_config(config, mode, overrides);
  const EngineResult r = run_engine(c);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  json doc = {{"tool", "rcotto"},
              {"version", RCOTTO_VERSION},
              {"config", to_json(c)},
              {"metrics", metrics_to_json(r.metrics)},
              {"limit_cycle",
               {{"n_cycles", r.limit_cycle.n_cycles},
                {"residual", r.limit_cycle.residual},
                {"residual_history", r.limit_cycle.residual_history}}},
              {"warnings", r.warnings}};
  emit(out, doc.dump(2) + "\n");
  return 0;
}

int cmd_sweep(const std::string& spec_path, const std::vector<std::string>& overrides,
              const std::string& out, int workers_flag, bool strict) {
  json j = read_json_file(spec_path);
  std::optional<int> file_workers;
  if (j.is_object() && j.contains("workers")) {
    if (!j["workers"].is_number_integer()) throw ConfigError("workers must be an integer");
    file_workers = j["workers"].get<int>();
    j.erase("workers");
  }
  if (!overrides.empty()) {
    json cfg = to_json(j.contains("config") ? config_from_json(j["config"]) : default_config());
    for (const auto& o : overrides) apply_override(cfg, o);
    j["config"] = cfg;
  }
  SweepSpec spec = sweep_spec_from_json(j);
  if (!out.empty()) spec.output = out;
  if (spec.output.empty()) spec.output = "sweep.csv";
  const auto rows = run_sweep(spec, resolve_workers(workers_flag, file_workers));
  const std::string manifest = write_sweep(spec, rows);
  std::size_t errors = 0;
  for (const auto& r : rows) {
    if (!r.ok()) {
      ++errors;
      std::cerr << "error at " << to_string(spec.axis) << "=" << format_number(r.axis_value)
                << " (" << to_string(r.mode) << "): " << r.error << "\n";
    }
  }
  std::cerr << "wrote " << rows.size() << " rows to " << spec.output << " (manifest "
            << manifest << ")\n";
  return (strict && errors > 0) ? kExitNumerical : 0;
}

int cmd_oracle(int dim_cap, int instances, std::uint64_t seed, const std::string& fault,
               const std::string& out) {
  verify::SuiteOptions opt;
  opt.dimension_cap = dim_cap;
  opt.instances = instances;
  opt.seed = seed;
  if (fault == "xi-sign") opt.fault = verify::Fault::xi_sign;
  else if (!fault.empty()) throw ConfigError("unknown fault '" + fault + "'");
  const verify::Report report = verify::run_suites(opt);
  for (const auto& c : report.checks)
    std::cerr << verify::to_string(c.status) << "  " << c.suite << " / " << c.name << "  "
              << format_number(c.value) << " (tol " << format_number(c.tolerance) << ")"
              << (c.detail.empty() ? "" : "  " + c.detail) << "\n";
  emit(out, verify::to_json(report).dump(2) + "\n");
  return report.passed() ? 0 : kExitOracle;
}

int cmd_export(const std::string& which, const std::string& config,
               const std::vector<std::string>& overrides, const std::string& dir,
               int workers_flag, bool strict) {
  const EngineConfig base = resolve_config(config, std::nullopt, overrides);
  std::vector<Figure> figs;
  if (which == "all") figs = {Figure::fig1a, Figure::fig1b, Figure::fig2, Figure::fig3, Figure::fig4};
  else figs = {figure_from_string(which)};
  const unsigned workers = resolve_workers(workers_flag, std::nullopt);
  std::size_t errors = 0;
  for (Figure f : figs) {
    for (const auto& file : figure_datasets(f, base, dir, workers)) {
      std::cerr << file.panel << ": " << file.csv << "\n";
      errors += file.errors;
    }
  }
  if (errors > 0) std::cerr << errors << " point(s) failed; see the manifests\n";
  return (strict && errors > 0) ? kExitNumerical : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reaction-coordinate quantum Otto engine"};
  app.set_version_flag("--version", std::string(RCOTTO_VERSION));
  app.require_subcommand(1);

  std::string config, out, spec_path, fault, figure, out_dir = "figures";
  std::optional<std::string> mode;
  std::vector<std::string> overrides;
  int workers = 0, dim_cap = kOracleMaxDim, instances = 20;
  std::uint64_t seed = verify::SuiteOptions{}.seed;
  bool strict = false;

  auto* sim = app.add_subcommand("simulate", "Run one engine to its limit cycle and print metrics");
  sim->add_option("-c,--config", config, "Engine configuration (JSON)");
  sim->add_option("--set", overrides, "Override a config value, e.g. --set tau_i=100");
  sim->add_option("--mode", mode, "coherent or incoherent")
      ->check(CLI::IsMember({"coherent", "incoherent"}));
  sim->add_option("-o,--out", out, "Output file (default: stdout)");

  auto* sw = app.add_subcommand("sweep", "Run a parameter sweep and write CSV plus manifest");
  sw->add_option("spec", spec_path, "Sweep specification (JSON)")->required();
  sw->add_option("--set", overrides, "Override a value of the base config");
  sw->add_option("-o,--out", out, "CSV path (overrides the spec)");
  sw->add_option("-w,--workers", workers, "Worker threads (env RCOTTO_WORKERS)");
  sw->add_flag("--strict", strict, "Exit 2 if any point failed");

  auto* orc = app.add_subcommand("oracle", "Run the small-instance equivalence suites");
  orc->add_option("--dim-cap", dim_cap, "Largest dimension for the propagation instances");
  orc->add_option("--instances", instances, "Number of random propagation instances")
      ->check(CLI::PositiveNumber);
  orc->add_option("--seed", seed, "Seed of the random instances");
  orc->add_option("-o,--out", out, "Report file (default: stdout)");
  orc->add_option("--fault", fault)->group("");  // test fixture: xi-sign

  auto* exp = app.add_subcommand("export-figures", "Write the data sets behind the figure panels");
  exp->add_option("figure", figure, "fig1a, fig1b, fig2, fig3, fig4 or all")->required();
  exp->add_option("-c,--config", config, "Base configuration (JSON)");
  exp->add_option("--set", overrides, "Override a value of the base config");
  exp->add_option("-d,--out-dir", out_dir, "Output directory")->capture_default_str();
  exp->add_option("-w,--workers", workers, "Worker threads (env RCOTTO_WORKERS)");
  exp->add_flag("--strict", strict, "Exit 2 if any point failed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*sim) return cmd_simulate(config, mode, overrides, out);
    if (*sw) return cmd_sweep(spec_path, overrides, out, workers, strict);
    if (*orc) return cmd_oracle(dim_cap, instances, seed, fault, out);
    if (*exp) return cmd_export(figure, config, overrides, out_dir, workers, strict);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
