// Command-line front end: density sweeps, route comparison, invariant suite,
// and config validation.  Exit codes: 0 all checks passed, 1 completed with
// tolerance failures, 2 configuration rejected, 3 internal numerical failure.

#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "jacobi/harness.hpp"

namespace {

using namespace jacobi;
using namespace jacobi::harness;

struct CommonFlags {
  std::string config_path;
  std::string out_path;
  std::string format;
  bool no_timestamp = false;
  int jobs = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "run configuration file")
      ->required();
  cmd->add_option("--out", flags.out_path, "output path (default: config/stdout)");
  cmd->add_option("--format", flags.format, "csv|json (overrides config)");
  cmd->add_flag("--no-timestamp", flags.no_timestamp,
                "omit the generated_at field for byte-stable output");
  cmd->add_option("--jobs", flags.jobs, "worker count for the lambda grid");
}

RunConfig make_config(const CommonFlags& flags) {
  RunConfig cfg = load_config(flags.config_path);
  if (!flags.out_path.empty()) cfg.out_path = flags.out_path;
  if (!flags.format.empty()) {
    if (flags.format == "csv")
      cfg.format = OutputFormat::CSV;
    else if (flags.format == "json")
      cfg.format = OutputFormat::JSON;
    else
      throw ParseError("--format must be csv|json");
  }
  if (flags.no_timestamp) cfg.timestamp = false;
  if (flags.jobs > 0) cfg.jobs = flags.jobs;
  return cfg;
}

int with_output(const RunConfig& cfg,
                const std::function<void(std::ostream&)>& writer) {
  if (cfg.out_path.empty()) {
    writer(std::cout);
  } else {
    std::ofstream out(cfg.out_path, std::ios::binary);
    if (!out) {
      std::cerr << "error: cannot open output path '" << cfg.out_path << "'\n";
      return 3;
    }
    writer(out);
  }
  return 0;
}

int run_route(const CommonFlags& flags,
              RouteReport (*sweep)(const RunConfig&)) {
  const RunConfig cfg = make_config(flags);
  const RouteReport rep = sweep(cfg);
  const int io = with_output(cfg, [&](std::ostream& os) {
    if (cfg.format == OutputFormat::CSV)
      write_route_csv(rep, cfg.timestamp, os);
    else
      write_route_json(rep, cfg.timestamp, os);
  });
  if (io != 0) return io;
  for (const auto& row : rep.rows)
    if (row.status != "ok" && row.status != "outside_band") return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral densities of unbounded Jacobi matrices, cross-validated "
               "over independent routes"};
  app.require_subcommand(1);

  CommonFlags flags;
  CLI::App* validate = app.add_subcommand("validate", "parse and check a config");
  CLI::App* crit = app.add_subcommand("density-critical", "asymptotic-formula route");
  CLI::App* noncrit =
      app.add_subcommand("density-noncritical", "bounded-variation-formula route");
  CLI::App* stab =
      app.add_subcommand("density-stabilized", "frozen-tail matrix densities");
  CLI::App* compare =
      app.add_subcommand("compare", "all configured routes with deltas and trends");
  CLI::App* invariants =
      app.add_subcommand("invariants", "module-level invariant battery");
  for (CLI::App* cmd : {validate, crit, noncrit, stab, compare, invariants})
    add_common(cmd, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) {
      const RunConfig cfg = make_config(flags);
      std::cout << "config ok: " << cfg.grid_points << " grid points on ["
                << cfg.window.re_lo << ", " << cfg.window.re_hi << "]\n";
      return 0;
    }

    if (crit->parsed()) return run_route(flags, run_critical_sweep);
    if (noncrit->parsed()) return run_route(flags, run_noncritical_sweep);
    if (stab->parsed()) return run_route(flags, run_stabilized_sweep);

    if (compare->parsed()) {
      const RunConfig cfg = make_config(flags);
      const ComparisonReport rep = run_density_sweep(cfg);
      const int io = with_output(cfg, [&](std::ostream& os) {
        if (cfg.format == OutputFormat::CSV)
          write_comparison_csv(rep, os);
        else
          write_comparison_json(rep, os);
      });
      if (io != 0) return io;
      std::cerr << "max|formula-oracle|/oracle = " << rep.summary.max_delta_oracle
                << ", final stabilized delta = " << rep.summary.max_delta_stab_final
                << ", trend fraction = " << rep.summary.trend_fraction
                << (rep.summary.pass ? " [pass]" : " [fail]") << "\n";
      return rep.summary.pass ? 0 : 1;
    }

    if (invariants->parsed()) {
      const RunConfig cfg = make_config(flags);
      const InvariantReport rep = run_invariant_suite(cfg);
      const int io = with_output(cfg, [&](std::ostream& os) {
        if (cfg.format == OutputFormat::CSV)
          write_invariants_csv(rep, cfg.timestamp, os);
        else
          write_invariants_json(rep, cfg.timestamp, os);
      });
      if (io != 0) return io;
      return rep.all_pass() ? 0 : 1;
    }
  } catch (const ParseError& e) {
    std::cerr << "config rejected: " << e.what() << "\n";
    return 2;
  } catch (const HypothesisViolation& e) {
    std::cerr << "config rejected: " << e.what() << "\n";
    return 2;
  } catch (const CriticalParameter& e) {
    std::cerr << "config rejected: " << e.what() << "\n";
    return 2;
  } catch (const NonPositiveEntry& e) {
    std::cerr << "config rejected: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
