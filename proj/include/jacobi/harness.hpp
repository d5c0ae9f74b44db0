#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jacobi/coefficients.hpp"
#include "jacobi/types.hpp"

namespace jacobi::harness {

enum class OutputFormat { CSV, JSON };

/// Parsed and hypothesis-checked run description.  One config = one run.
struct RunConfig {
  CoefficientFamily family;
  Window window{-4.0, -0.5};
  Index grid_points = 36;
  std::vector<Index> n_schedule;       // stabilization indices, increasing
  std::vector<Real> eps_schedule;      // smoothing widths, increasing
  std::vector<Index> n_seed_schedule;  // seed indices, increasing
  std::map<std::string, Real> tolerances;
  std::string out_path;
  OutputFormat format = OutputFormat::CSV;
  int jobs = 1;
  bool timestamp = true;

  Real tolerance(const std::string& name, Real fallback) const;
  std::vector<Real> grid() const;  // uniform lambda grid over the window
};

/// Parses the flat dotted-key text and validates the family hypotheses
/// structurally.  Throws ParseError / HypothesisViolation / CriticalParameter.
RunConfig validate_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// One sweep row; absent cells mean the route was not computed at this point.
struct ComparisonRow {
  Real lambda = 0.0;
  std::optional<Real> rho_formula, rho_formula_unc;
  std::vector<std::optional<Real>> rho_stab;  // aligned with n_schedule
  std::vector<std::string> stab_status;       // "" or error tag per cell
  std::optional<Real> rho_resolvent, rho_resolvent_unc;
  std::optional<Real> delta_oracle_rel;
  std::optional<Real> delta_stab_final_rel;
  bool trend_flag = false;
  std::string status = "ok";
};

struct ComparisonSummary {
  Real max_delta_oracle = 0.0;
  Real median_delta_oracle = 0.0;
  Real max_delta_stab_final = 0.0;
  Real trend_fraction = 0.0;
  int failed_rows = 0;
  bool pass = false;
};

struct ComparisonReport {
  RunConfig config;
  std::vector<ComparisonRow> rows;
  ComparisonSummary summary;
};

/// All configured routes on the lambda grid; per-point failures land in the
/// row status, never abort the sweep.
ComparisonReport run_density_sweep(const RunConfig& config);

struct InvariantEntry {
  std::string name;
  Real measured = 0.0;
  Real threshold = 0.0;
  bool pass = false;
  std::string detail;
};

struct InvariantReport {
  std::vector<InvariantEntry> entries;
  bool all_pass() const;
};

/// Module-level invariant battery for the configured family.
InvariantReport run_invariant_suite(const RunConfig& config);

/// Single-route sweeps backing the density-* subcommands.
struct RouteRow {
  Real lambda = 0.0;
  std::vector<std::optional<Real>> values;  // one per column
  std::vector<std::optional<Real>> uncertainties;
  std::string status = "ok";
};

struct RouteReport {
  std::vector<std::string> columns;  // e.g. {"rho"} or {"rho_stab_1000", ...}
  std::vector<RouteRow> rows;
};

RouteReport run_critical_sweep(const RunConfig& config);
RouteReport run_noncritical_sweep(const RunConfig& config);
RouteReport run_stabilized_sweep(const RunConfig& config);

void write_comparison_csv(const ComparisonReport& rep, std::ostream& os);
void write_comparison_json(const ComparisonReport& rep, std::ostream& os);
void write_route_csv(const RouteReport& rep, bool timestamp, std::ostream& os);
void write_route_json(const RouteReport& rep, bool timestamp, std::ostream& os);
void write_invariants_csv(const InvariantReport& rep, bool timestamp, std::ostream& os);
void write_invariants_json(const InvariantReport& rep, bool timestamp, std::ostream& os);

}  // namespace jacobi::harness
