#include "jacobi/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "jacobi/critical.hpp"
#include "jacobi/errors.hpp"
#include "jacobi/levinson.hpp"
#include "jacobi/noncritical.hpp"
#include "jacobi/orthopoly.hpp"
#include "jacobi/stabilized.hpp"
#include "jacobi/trace.hpp"

namespace jacobi::harness {

namespace {

constexpr Real kBandMarginFrac = 0.01;  // stabilized densities reported only
                                        // this far inside the band

std::string fmt_real(Real x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

std::string fmt_cell(const std::optional<Real>& x) {
  return x ? fmt_real(*x) : std::string();
}

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

template <typename F>
void parallel_for(Index count, int jobs, F&& body) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || count <= 1) {
    for (Index i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<Index> next{0};
  std::vector<std::thread> pool;
  const int workers = int(std::min<Index>(jobs, count));
  pool.reserve(size_t(workers));
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (Index i; (i = next.fetch_add(1)) < count;) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// Config text parsing: flat "dotted.key = value" lines, '#' comments,
// bracketed numeric lists.

struct RawConfig {
  std::map<std::string, std::string> scalars;
  std::map<std::string, std::vector<Real>> lists;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

Real parse_real(const std::string& s, const std::string& key) {
  try {
    size_t pos = 0;
    const Real v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("key '" + key + "': cannot parse number '" + s + "'");
  }
}

RawConfig parse_raw(const std::string& text) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("line " + std::to_string(lineno) + ": empty key");
    if (raw.scalars.count(key) || raw.lists.count(key))
      throw ParseError("duplicate key '" + key + "'");
    if (!value.empty() && value.front() == '[') {
      if (value.back() != ']')
        throw ParseError("key '" + key + "': unterminated list");
      std::vector<Real> items;
      std::string body = value.substr(1, value.size() - 2);
      std::istringstream items_in(body);
      std::string item;
      while (std::getline(items_in, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ParseError("key '" + key + "': empty list item");
        items.push_back(parse_real(item, key));
      }
      raw.lists.emplace(key, std::move(items));
    } else {
      raw.scalars.emplace(key, value);
    }
  }
  return raw;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "family.kind",        "family.alpha",
      "family.perturbation", "family.p.coeff",
      "family.p.exponent",  "family.q.coeff",
      "family.q.exponent",  "family.p.table",
      "family.q.table",     "family.beta",
      "family.d",           "family.a.table",
      "family.b.table",     "family.a.tail.coeff",
      "family.a.tail.exponent", "family.b.tail.coeff",
      "family.b.tail.exponent", "window",
      "grid.points",        "schedule.n",
      "schedule.eps",       "schedule.n_seed",
      "output.path",        "output.format",
      "jobs",               "timestamp",
  };
  return keys;
}

template <typename T>
void require_increasing(const std::vector<T>& v, const std::string& key) {
  for (size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1]))
      throw ParseError("'" + key + "' must be strictly increasing");
}

}  // namespace

Real RunConfig::tolerance(const std::string& name, Real fallback) const {
  const auto it = tolerances.find(name);
  return it == tolerances.end() ? fallback : it->second;
}

std::vector<Real> RunConfig::grid() const {
  std::vector<Real> g(static_cast<size_t>(grid_points));
  for (Index i = 0; i < grid_points; ++i)
    g[size_t(i)] =
        window.re_lo + (window.re_hi - window.re_lo) * Real(i) / Real(grid_points - 1);
  return g;
}

RunConfig validate_config(const std::string& text) {
  const RawConfig raw = parse_raw(text);

  for (const auto& [k, v] : raw.scalars) {
    (void)v;
    if (!known_keys().count(k) && k.rfind("tolerance.", 0) != 0)
      throw ParseError("unknown key '" + k + "'");
  }
  for (const auto& [k, v] : raw.lists) {
    (void)v;
    if (!known_keys().count(k))
      throw ParseError("unknown key '" + k + "' (list)");
  }

  auto scalar = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = raw.scalars.find(key);
    if (it == raw.scalars.end()) return std::nullopt;
    return it->second;
  };
  auto list = [&](const std::string& key) -> std::optional<std::vector<Real>> {
    const auto it = raw.lists.find(key);
    if (it == raw.lists.end()) return std::nullopt;
    return it->second;
  };
  auto number = [&](const std::string& key) -> std::optional<Real> {
    const auto s = scalar(key);
    if (!s) return std::nullopt;
    return parse_real(*s, key);
  };

  RunConfig cfg;

  const auto kind = scalar("family.kind");
  if (!kind) throw ParseError("missing required key 'family.kind'");
  if (*kind == "critical") {
    const Real alpha = number("family.alpha").value_or(0.5);
    if (!(alpha > 0.0 && alpha < 1.0))
      throw HypothesisViolation("critical family requires alpha in (0, 1)");
    Perturbation pert;
    const std::string pkind = scalar("family.perturbation").value_or("zero");
    if (pkind == "zero") {
      pert = Perturbation::zero();
    } else if (pkind == "power") {
      pert = Perturbation::power(
          number("family.p.coeff").value_or(0.0), number("family.p.exponent").value_or(1.0),
          number("family.q.coeff").value_or(0.0), number("family.q.exponent").value_or(1.0));
      // l^1 condition on {p_n / n^{alpha/2}}: sum n^{-s - alpha/2} < inf
      // needs s > 1 - alpha/2 (and likewise for q).
      const Real s_min = 1.0 - 0.5 * alpha;
      if (pert.p_coeff != 0.0 && !(pert.p_exponent > s_min))
        throw HypothesisViolation(
            "{p_n/n^{alpha/2}} not summable: need p exponent > " +
            std::to_string(s_min));
      if (pert.q_coeff != 0.0 && !(pert.q_exponent > s_min))
        throw HypothesisViolation(
            "{q_n/n^{alpha/2}} not summable: need q exponent > " +
            std::to_string(s_min));
    } else if (pkind == "table") {
      pert = Perturbation::table(list("family.p.table").value_or(std::vector<Real>{}),
                                 list("family.q.table").value_or(std::vector<Real>{}));
    } else {
      throw ParseError("family.perturbation must be zero|power|table");
    }
    cfg.family = CoefficientFamily::critical(alpha, pert);
  } else if (*kind == "noncritical") {
    const Real beta = number("family.beta").value_or(0.5);
    const Real d = number("family.d").value_or(0.0);
    if (!(beta > 0.0))
      throw HypothesisViolation("noncritical family requires beta > 0");
    if (beta > 1.0)
      throw HypothesisViolation(
          "sum 1/a_n with a_n = n^beta must diverge: need beta <= 1");
    if (!(std::abs(d) < 1.0))
      throw CriticalParameter(
          "noncritical family requires |d| < 1 (d = +-1 is the critical case)");
    cfg.family = CoefficientFamily::noncritical(beta, d);
  } else if (*kind == "explicit") {
    PowerTail a_tail{number("family.a.tail.coeff").value_or(1.0),
                     number("family.a.tail.exponent").value_or(0.0)};
    PowerTail b_tail{number("family.b.tail.coeff").value_or(0.0),
                     number("family.b.tail.exponent").value_or(0.0)};
    cfg.family = CoefficientFamily::explicit_entries(
        list("family.a.table").value_or(std::vector<Real>{}),
        list("family.b.table").value_or(std::vector<Real>{}), a_tail, b_tail);
  } else {
    throw ParseError("family.kind must be critical|noncritical|explicit");
  }

  if (const auto w = list("window")) {
    if (w->size() != 2 && w->size() != 4)
      throw ParseError("window must be [re_lo, re_hi] or [re_lo, re_hi, im_lo, im_hi]");
    cfg.window.re_lo = (*w)[0];
    cfg.window.re_hi = (*w)[1];
    cfg.window.im_lo = w->size() == 4 ? (*w)[2] : 0.0;
    cfg.window.im_hi = w->size() == 4 ? (*w)[3] : 0.0;
  } else if (cfg.family.kind == FamilyKind::NonCritical ||
             cfg.family.kind == FamilyKind::Explicit) {
    cfg.window = {-3.0, 3.0};
  }
  if (!(cfg.window.re_lo < cfg.window.re_hi))
    throw ParseError("window must have re_lo < re_hi");
  if (!cfg.window.is_interval())
    throw ParseError("sweep windows must be real intervals");
  if (cfg.family.kind == FamilyKind::Critical) {
    // The validated theory lives on compacts in the open negative half-axis;
    // refuse windows touching 0 rather than guess continuity there.
    if (!(cfg.window.re_hi <= -0.05))
      throw HypothesisViolation(
          "critical window must satisfy re_hi <= -0.05 (window away from 0)");
  }

  cfg.grid_points = Index(number("grid.points").value_or(36));
  if (cfg.grid_points < 2) throw ParseError("grid.points >= 2 required");

  if (const auto v = list("schedule.n")) {
    for (Real x : *v) cfg.n_schedule.push_back(Index(std::llround(x)));
    require_increasing(cfg.n_schedule, "schedule.n");
    if (!cfg.n_schedule.empty() && cfg.n_schedule.front() < 1)
      throw ParseError("schedule.n entries must be >= 1");
  }
  if (const auto v = list("schedule.eps")) {
    cfg.eps_schedule = *v;
    require_increasing(cfg.eps_schedule, "schedule.eps");
    if (!cfg.eps_schedule.empty() && !(cfg.eps_schedule.front() > 0.0))
      throw ParseError("schedule.eps entries must be positive");
  }
  if (const auto v = list("schedule.n_seed")) {
    for (Real x : *v) cfg.n_seed_schedule.push_back(Index(std::llround(x)));
    require_increasing(cfg.n_seed_schedule, "schedule.n_seed");
  }

  for (const auto& [k, v] : raw.scalars) {
    if (k.rfind("tolerance.", 0) == 0)
      cfg.tolerances[k.substr(10)] = parse_real(v, k);
  }

  if (const auto p = scalar("output.path")) cfg.out_path = *p;
  if (const auto f = scalar("output.format")) {
    if (*f == "csv")
      cfg.format = OutputFormat::CSV;
    else if (*f == "json")
      cfg.format = OutputFormat::JSON;
    else
      throw ParseError("output.format must be csv|json");
  }
  if (const auto j = number("jobs")) {
    cfg.jobs = int(*j);
    if (cfg.jobs < 1) throw ParseError("jobs >= 1 required");
  }
  if (const auto t = scalar("timestamp")) {
    if (*t == "true")
      cfg.timestamp = true;
    else if (*t == "false")
      cfg.timestamp = false;
    else
      throw ParseError("timestamp must be true|false");
  }

  check_positive_entries(cfg.family,
                         std::max<Index>(64, Index(cfg.family.a_table.size())));
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return validate_config(ss.str());
}

// ---------------------------------------------------------------------------
// Density sweep.

namespace {

critical::Options critical_options_from(const RunConfig& cfg) {
  critical::Options opt;
  opt.window = cfg.window;
  if (!cfg.n_seed_schedule.empty()) {
    opt.n_seed = cfg.n_seed_schedule.front();
    opt.seed_doubling = cfg.n_seed_schedule.size() > 1;
  }
  return opt;
}

noncritical::Options noncritical_options_from(const RunConfig& cfg) {
  noncritical::Options opt;
  if (!cfg.n_seed_schedule.empty()) {
    opt.n_seed = cfg.n_seed_schedule.front();
    opt.seed_doubling = cfg.n_seed_schedule.size() > 1;
  }
  return opt;
}

stabilized::ResolventDensityOptions resolvent_options_from(const RunConfig& cfg) {
  stabilized::ResolventDensityOptions opt;
  if (!cfg.eps_schedule.empty()) opt.eps_schedule = cfg.eps_schedule;
  return opt;
}

std::string error_tag(const Error& e) {
  const std::string what = e.what();
  const auto colon = what.find(':');
  return colon == std::string::npos ? what : what.substr(0, colon);
}

}  // namespace

ComparisonReport run_density_sweep(const RunConfig& cfg) {
  ComparisonReport rep;
  rep.config = cfg;
  const std::vector<Real> grid = cfg.grid();
  rep.rows.assign(grid.size(), ComparisonRow{});

  // N0 is a per-window quantity; compute it once for critical sweeps.
  std::optional<critical::Pipeline> pipeline;
  if (cfg.family.kind == FamilyKind::Critical)
    pipeline.emplace(cfg.family, critical_options_from(cfg));
  const noncritical::Options nc_opt = noncritical_options_from(cfg);
  const stabilized::ResolventDensityOptions res_opt = resolvent_options_from(cfg);

  parallel_for(Index(grid.size()), cfg.jobs, [&](Index i) {
    ComparisonRow& row = rep.rows[size_t(i)];
    row.lambda = grid[size_t(i)];
    row.rho_stab.assign(cfg.n_schedule.size(), std::nullopt);
    row.stab_status.assign(cfg.n_schedule.size(), "");

    try {
      if (cfg.family.kind == FamilyKind::Critical) {
        const critical::CriticalDensity cd = pipeline->rho(row.lambda);
        row.rho_formula = cd.density.value;
        row.rho_formula_unc = cd.density.uncertainty;
      } else if (cfg.family.kind == FamilyKind::NonCritical) {
        const noncritical::NonCriticalDensity nd =
            noncritical::rho_noncritical(cfg.family, row.lambda, nc_opt);
        row.rho_formula = nd.density.value;
        row.rho_formula_unc = nd.density.uncertainty;
      }
    } catch (const Error& e) {
      row.status = error_tag(e);
    }

    for (size_t k = 0; k < cfg.n_schedule.size(); ++k) {
      const Index N = cfg.n_schedule[k];
      try {
        const auto model = stabilized::stabilized_model(cfg.family, N);
        if (!model.inside_band(row.lambda, kBandMarginFrac)) {
          row.stab_status[k] = "outside_band";
          continue;
        }
        row.rho_stab[k] =
            stabilized::rho_stabilized(cfg.family, N, row.lambda).value;
      } catch (const Error& e) {
        row.stab_status[k] = error_tag(e);
      }
    }

    try {
      const DensityResult res =
          stabilized::resolvent_density(cfg.family, row.lambda, res_opt);
      row.rho_resolvent = res.value;
      row.rho_resolvent_unc = res.uncertainty;
    } catch (const Error& e) {
      if (row.status == "ok") row.status = error_tag(e);
    }

    if (row.rho_formula && row.rho_resolvent && *row.rho_resolvent != 0.0)
      row.delta_oracle_rel =
          std::abs(*row.rho_formula - *row.rho_resolvent) / *row.rho_resolvent;

    if (row.rho_formula) {
      std::vector<Real> deltas;
      for (const auto& cell : row.rho_stab)
        if (cell)
          deltas.push_back(std::abs(*cell - *row.rho_formula) /
                           std::abs(*row.rho_formula));
      if (!deltas.empty()) row.delta_stab_final_rel = deltas.back();
      if (deltas.size() >= 2) {
        row.trend_flag = true;
        for (size_t k = 1; k < deltas.size(); ++k)
          if (deltas[k] > deltas[k - 1] * (1.0 + 1e-12)) row.trend_flag = false;
      }
    }
  });

  // Summary: recomputable from the rows; pass/fail only against configured
  // tolerances.
  ComparisonSummary& s = rep.summary;
  std::vector<Real> oracle_deltas;
  Index trend_eligible = 0, trend_ok = 0;
  for (const auto& row : rep.rows) {
    if (row.status != "ok") ++s.failed_rows;
    if (row.delta_oracle_rel) {
      oracle_deltas.push_back(*row.delta_oracle_rel);
      s.max_delta_oracle = std::max(s.max_delta_oracle, *row.delta_oracle_rel);
    }
    if (row.delta_stab_final_rel)
      s.max_delta_stab_final =
          std::max(s.max_delta_stab_final, *row.delta_stab_final_rel);
    Index present = 0;
    for (const auto& cell : row.rho_stab) present += cell ? 1 : 0;
    if (row.rho_formula && present >= 2) {
      ++trend_eligible;
      trend_ok += row.trend_flag ? 1 : 0;
    }
  }
  if (!oracle_deltas.empty()) {
    std::sort(oracle_deltas.begin(), oracle_deltas.end());
    s.median_delta_oracle = oracle_deltas[oracle_deltas.size() / 2];
  }
  s.trend_fraction =
      trend_eligible == 0 ? 1.0 : Real(trend_ok) / Real(trend_eligible);

  bool pass = s.failed_rows == 0;
  if (!oracle_deltas.empty())
    pass = pass && s.max_delta_oracle <= cfg.tolerance("oracle_rel", 1e-2);
  if (!cfg.n_schedule.empty() && trend_eligible > 0) {
    pass = pass && s.max_delta_stab_final <= cfg.tolerance("stab_final_rel", 1e-2);
    pass = pass && s.trend_fraction >= cfg.tolerance("trend_fraction", 0.8);
  }
  s.pass = pass;
  return rep;
}

// ---------------------------------------------------------------------------
// Single-route sweeps.

RouteReport run_critical_sweep(const RunConfig& cfg) {
  if (cfg.family.kind != FamilyKind::Critical)
    throw HypothesisViolation("density-critical requires a critical family");
  RouteReport rep;
  rep.columns = {"rho_critical"};
  const std::vector<Real> grid = cfg.grid();
  rep.rows.assign(grid.size(), RouteRow{});
  const critical::Pipeline pipeline(cfg.family, critical_options_from(cfg));
  parallel_for(Index(grid.size()), cfg.jobs, [&](Index i) {
    RouteRow& row = rep.rows[size_t(i)];
    row.lambda = grid[size_t(i)];
    row.values.assign(1, std::nullopt);
    row.uncertainties.assign(1, std::nullopt);
    try {
      const auto cd = pipeline.rho(row.lambda);
      row.values[0] = cd.density.value;
      row.uncertainties[0] = cd.density.uncertainty;
    } catch (const Error& e) {
      row.status = error_tag(e);
    }
  });
  return rep;
}

RouteReport run_noncritical_sweep(const RunConfig& cfg) {
  if (cfg.family.kind != FamilyKind::NonCritical)
    throw HypothesisViolation("density-noncritical requires a noncritical family");
  RouteReport rep;
  rep.columns = {"rho_noncritical"};
  const std::vector<Real> grid = cfg.grid();
  rep.rows.assign(grid.size(), RouteRow{});
  const noncritical::Options opt = noncritical_options_from(cfg);
  parallel_for(Index(grid.size()), cfg.jobs, [&](Index i) {
    RouteRow& row = rep.rows[size_t(i)];
    row.lambda = grid[size_t(i)];
    row.values.assign(1, std::nullopt);
    row.uncertainties.assign(1, std::nullopt);
    try {
      const auto nd = noncritical::rho_noncritical(cfg.family, row.lambda, opt);
      row.values[0] = nd.density.value;
      row.uncertainties[0] = nd.density.uncertainty;
    } catch (const Error& e) {
      row.status = error_tag(e);
    }
  });
  return rep;
}

RouteReport run_stabilized_sweep(const RunConfig& cfg) {
  RouteReport rep;
  std::vector<Index> schedule = cfg.n_schedule;
  if (schedule.empty()) schedule = {1};
  for (Index N : schedule) rep.columns.push_back("rho_stab_" + std::to_string(N));
  const std::vector<Real> grid = cfg.grid();
  rep.rows.assign(grid.size(), RouteRow{});
  parallel_for(Index(grid.size()), cfg.jobs, [&](Index i) {
    RouteRow& row = rep.rows[size_t(i)];
    row.lambda = grid[size_t(i)];
    row.values.assign(schedule.size(), std::nullopt);
    row.uncertainties.assign(schedule.size(), std::nullopt);
    for (size_t k = 0; k < schedule.size(); ++k) {
      try {
        const auto model = stabilized::stabilized_model(cfg.family, schedule[k]);
        if (!model.inside_band(row.lambda, kBandMarginFrac)) {
          if (row.status == "ok") row.status = "outside_band";
          continue;
        }
        row.values[k] =
            stabilized::rho_stabilized(cfg.family, schedule[k], row.lambda).value;
      } catch (const Error& e) {
        row.status = error_tag(e);
      }
    }
  });
  return rep;
}

// ---------------------------------------------------------------------------
// Invariant suite.

namespace {

void push(InvariantReport& rep, std::string name, Real measured, Real threshold,
          std::string detail = "") {
  InvariantEntry e;
  e.name = std::move(name);
  e.measured = measured;
  e.threshold = threshold;
  e.pass = measured <= threshold;
  e.detail = std::move(detail);
  rep.entries.push_back(std::move(e));
}

Real probe_lambda(const RunConfig& cfg) {
  return 0.5 * (cfg.window.re_lo + cfg.window.re_hi);
}

void invariants_shared(const RunConfig& cfg, InvariantReport& rep) {
  const Real lam = probe_lambda(cfg);

  // W{P,Q} = 1 at every n (scaled recurrence, deep range).
  {
    const PolySeq ps =
        orthopoly(cfg.family, lam, 100000, RecurrenceMode::Scaled);
    Real worst = 0.0;
    for (Index n : {Index(1), Index(10), Index(100), Index(1000), Index(10000),
                    Index(99999)})
      worst = std::max(worst, std::abs(ps.wronskian_pq(cfg.family, n) - 1.0));
    push(rep, "wronskian_pq_unit", worst, 1e-10);
  }

  // Transfer consistency B_n (P_{n-1}, P_n) = (P_n, P_{n+1}).
  {
    const PolySeq ps = orthopoly(cfg.family, lam, 1024);
    Real worst = 0.0;
    for (Index n : {Index(2), Index(17), Index(256), Index(1023)}) {
      const Mat2c B = transfer_matrix(cfg.family, n, lam);
      const Vec2c in(ps.P(n - 1), ps.P(n));
      const Vec2c out = B * in;
      const Real denom = std::abs(ps.P(n)) + std::abs(ps.P(n + 1));
      worst = std::max(worst, (std::abs(out(0) - ps.P(n)) +
                               std::abs(out(1) - ps.P(n + 1))) /
                                  denom);
    }
    push(rep, "transfer_consistency", worst, 1e-12);
  }

  // Branch continuity of z_N along the grid.
  {
    const Index N = cfg.n_schedule.empty() ? 8 : cfg.n_schedule.front();
    const auto model = stabilized::stabilized_model(cfg.family, N);
    Real worst = 0.0;
    std::optional<Real> prev;
    for (Real x : cfg.grid()) {
      const Complex z = stabilized::z_branch(x, model.a, model.b).z;
      const Real a = std::arg(z);
      if (prev) worst = std::max(worst, std::abs(wrap_phase(a - *prev)));
      prev = a;
    }
    push(rep, "branch_continuity_z", worst, 0.5 * kPi);
  }
}

void invariants_critical(const RunConfig& cfg, InvariantReport& rep) {
  const Real lam = probe_lambda(cfg);
  const critical::Options opt = critical_options_from(cfg);
  const Index n0 = levinson::select_N0(cfg.family, cfg.window);

  // |eta^-|^2 closed form against the complex evaluation.
  {
    Real worst = 0.0;
    for (Index n : {n0, 2 * n0, 16 * n0, 1024 * n0}) {
      for (Real x : cfg.grid()) {
        const Complex eta = levinson::eta_minus_value(cfg.family.alpha, x, n);
        const Real direct = std::norm(eta);
        const Real closed =
            std::exp(levinson::log_abs2_eta_minus(cfg.family.alpha, x, n));
        worst = std::max(worst, std::abs(direct - closed) / closed);
      }
    }
    push(rep, "eta_mod2_closed_form", worst, 1e-12);
  }

  // Factored vs direct sqrt(chi) branches past N0.
  {
    Real worst = 0.0;
    for (Index n : {n0, 4 * n0, 64 * n0}) {
      for (Real x : cfg.grid()) {
        const auto q = levinson::chain_at(cfg.family, n, x);
        const Complex direct = levinson::sqrt_chi_direct(cfg.family.alpha, n, x);
        worst = std::max(worst,
                         std::abs(q.sqrt_chi - direct) / std::abs(direct));
      }
    }
    push(rep, "sqrt_chi_two_forms", worst, 1e-12);
  }

  // Branch coherence of sqrt(chi) in n and lambda.
  {
    Real worst = 0.0;
    std::optional<Real> prev;
    for (Real x : cfg.grid()) {
      const Real a =
          std::arg(levinson::chain_at(cfg.family, 4 * n0, x).sqrt_chi);
      if (prev) worst = std::max(worst, std::abs(wrap_phase(a - *prev)));
      prev = a;
    }
    prev.reset();
    for (Index n = n0; n <= 64 * n0; n *= 2) {
      const Real a = std::arg(levinson::chain_at(cfg.family, n, lam).sqrt_chi);
      if (prev) worst = std::max(worst, std::abs(wrap_phase(a - *prev)));
      prev = a;
    }
    push(rep, "branch_coherence_sqrt_chi", worst, 0.5 * kPi);
  }

  // Stabilized-route identity rho = Im m / pi inside the band.
  {
    const Index N = 64;
    const auto model = stabilized::stabilized_model(cfg.family, N);
    Real worst = 0.0;
    for (Real x : cfg.grid()) {
      if (!model.inside_band(x, kBandMarginFrac)) continue;
      const Real direct = stabilized::rho_stabilized(cfg.family, N, x).value;
      const Real via_m =
          stabilized::weyl_m_stabilized(cfg.family, N, x).m.imag() / kPi;
      worst = std::max(worst, std::abs(direct - via_m) / direct);
    }
    push(rep, "route_identity_stabilized", worst, 1e-10);
  }

  // Theorem Wronskian identity with seed-doubling trend.
  {
    const auto w = critical::wronskian_identity_check(cfg.family, lam, opt);
    push(rep, "wronskian_constancy", w.constancy_max_rel, 1e-10);
    push(rep, "wronskian_identity_theorem", w.deviation,
         cfg.tolerance("wronskian_identity", 1e-3),
         w.trend_improving ? "trend improving" : "trend NOT improving");
  }

  // Decomposition error shrinks between index windows.
  {
    const auto lo = critical::decomposition_check(cfg.family, lam, 1000, 2000, opt);
    const auto hi = critical::decomposition_check(cfg.family, lam, 10000, 20000, opt);
    push(rep, "decomposition_envelope", hi.max_normalized_error, 5e-2,
         "window [1e4, 2e4]");
    push(rep, "decomposition_trend",
         hi.max_normalized_error / std::max(lo.max_normalized_error, 1e-300), 1.0,
         "ratio of [1e4,2e4] to [1e3,2e3] errors");
  }

  // N0-invariance of the emitted density.
  {
    critical::Options a = opt;
    a.n0_override = n0;
    critical::Options b = opt;
    b.n0_override = n0 + 1;
    const Real va = critical::rho_critical(cfg.family, lam, a).density.value;
    const Real vb = critical::rho_critical(cfg.family, lam, b).density.value;
    push(rep, "n0_invariance", std::abs(va - vb) / va, 1e-12);
  }

  // Stabilized density against the resolvent of the frozen family.
  {
    const Index N = cfg.n_schedule.empty() ? 1000 : cfg.n_schedule.front();
    stabilized::ResolventDensityOptions ropt = resolvent_options_from(cfg);
    ropt.solve.freeze = N;
    Real worst = 0.0;
    for (Real x : {lam, 0.75 * cfg.window.re_lo + 0.25 * cfg.window.re_hi}) {
      const auto model = stabilized::stabilized_model(cfg.family, N);
      if (!model.inside_band(x, kBandMarginFrac)) continue;
      const Real direct = stabilized::rho_stabilized(cfg.family, N, x).value;
      const Real oracle = stabilized::resolvent_density(cfg.family, x, ropt).value;
      worst = std::max(worst,
                       std::abs(direct - oracle) / std::max(1e-3 * direct, 1e-6));
    }
    push(rep, "oracle_consistency_stabilized", worst, 1.0,
         "|rho_N - resolvent| / max(1e-6, 1e-3 rho)");
  }
}

void invariants_noncritical(const RunConfig& cfg, InvariantReport& rep) {
  const Real lam = probe_lambda(cfg);
  const noncritical::Options opt = noncritical_options_from(cfg);

  // Determinant identity mu^+ mu^- = a_{n-1}/a_n.
  {
    Real worst = 0.0;
    for (Index n : {Index(2), Index(5), Index(64), Index(4096)}) {
      for (Real x : cfg.grid()) {
        const auto mp = noncritical::mu_pm(cfg.family, n, x);
        const Real target = coeffs(cfg.family, n - 1).a / coeffs(cfg.family, n).a;
        worst = std::max(worst,
                         std::abs(mp.mu_plus * mp.mu_minus - target) / target);
      }
    }
    push(rep, "mu_det_identity", worst, 1e-14);
  }

  // Exact stabilization of sqrt(a_n) prod |mu^-|.
  {
    const auto m = noncritical::M_of(cfg.family, lam);
    const Index L = m.stabilization_index;
    auto partial = [&](Index n) {
      CompensatedSum s;
      for (Index l = 2; l <= n; ++l)
        s.add(std::log(std::abs(noncritical::mu_pm(cfg.family, l, lam).mu_minus)));
      return 0.5 * std::log(coeffs(cfg.family, n).a) + s.value();
    };
    const Real at_l = partial(std::max<Index>(L, 2));
    const Real at_10l = partial(10 * std::max<Index>(L, 2));
    push(rep, "m_exact_stabilization", std::abs(at_10l - at_l), 1e-14,
         "log-product drift L -> 10L");
  }

  // Appendix Wronskian identity with seed doubling.
  {
    const auto nd = noncritical::rho_noncritical(cfg.family, lam, opt);
    const Real target =
        2.0 * std::sqrt(1.0 - cfg.family.d * cfg.family.d) * nd.M * nd.M;
    auto dev_for = [&](Index seed) {
      const SolutionTrace um =
          noncritical::u_minus_noncritical(cfg.family, lam, seed, seed);
      const SolutionTrace up = conjugate_trace(um);
      const Complex w = trace_wronskian(up, um, cfg.family, 10);
      return std::abs(w - Complex(0.0, -target)) / target;
    };
    const Real d1 = dev_for(opt.n_seed);
    const Real d2 = dev_for(2 * opt.n_seed);
    push(rep, "wronskian_identity_appb", d2, cfg.tolerance("wronskian_identity", 1e-2),
         d2 <= d1 ? "trend improving" : "trend NOT improving");
  }

  // Decomposition with the 1/sqrt(a_n) envelope, shrinking under window growth.
  {
    const auto nd = noncritical::rho_noncritical(cfg.family, lam, opt);
    const SolutionTrace um = noncritical::u_minus_noncritical(
        cfg.family, lam, std::max<Index>(opt.n_seed, 20001), opt.n_seed);
    const PolySeq ps = orthopoly(cfg.family, lam, 20000);
    auto win_err = [&](Index lo, Index hi) {
      Real worst = 0.0;
      for (Index n = lo; n <= hi; ++n) {
        const Complex recon = 2.0 * (nd.psi * std::conj(um.value(n))).real();
        const Real env =
            2.0 * std::abs(nd.psi) * nd.M / std::sqrt(coeffs(cfg.family, n).a);
        worst = std::max(worst, std::abs(ps.P(n) - recon) / env);
      }
      return worst;
    };
    const Real lo = win_err(1000, 2000);
    const Real hi = win_err(10000, 20000);
    push(rep, "decomposition_appb", hi, 5e-2, "window [1e4, 2e4]");
    push(rep, "decomposition_trend_appb", hi / std::max(lo, 1e-300), 1.0);
  }

  // Branch continuity of mu^- along the grid at fixed rows.
  {
    Real worst = 0.0;
    for (Index n : {Index(2), Index(3), Index(8), Index(64)}) {
      std::optional<Real> prev;
      for (Real x : cfg.grid()) {
        const Real a = std::arg(noncritical::mu_pm(cfg.family, n, x).mu_minus);
        if (prev) worst = std::max(worst, std::abs(wrap_phase(a - *prev)));
        prev = a;
      }
    }
    push(rep, "branch_continuity_mu", worst, 0.5 * kPi);
  }

  // Formula against the resolvent oracle at the probe point.
  {
    const auto nd = noncritical::rho_noncritical(cfg.family, lam, opt);
    const auto oracle =
        stabilized::resolvent_density(cfg.family, lam, resolvent_options_from(cfg));
    push(rep, "oracle_consistency_formula",
         std::abs(nd.density.value - oracle.value) / oracle.value,
         cfg.tolerance("oracle_rel", 1e-2));
  }
}

}  // namespace

bool InvariantReport::all_pass() const {
  for (const auto& e : entries)
    if (!e.pass) return false;
  return true;
}

InvariantReport run_invariant_suite(const RunConfig& cfg) {
  InvariantReport rep;
  invariants_shared(cfg, rep);
  if (cfg.family.kind == FamilyKind::Critical) invariants_critical(cfg, rep);
  if (cfg.family.kind == FamilyKind::NonCritical) invariants_noncritical(cfg, rep);
  return rep;
}

// ---------------------------------------------------------------------------
// Writers.

void write_comparison_csv(const ComparisonReport& rep, std::ostream& os) {
  if (rep.config.timestamp) os << "# generated_at=" << iso_now() << "\n";
  os << "lambda,rho_formula,rho_formula_unc";
  for (Index N : rep.config.n_schedule) os << ",rho_stab_" << N;
  os << ",rho_resolvent,rho_resolvent_unc,delta_oracle_rel,trend_flag,status\n";
  for (const auto& row : rep.rows) {
    os << fmt_real(row.lambda) << ',' << fmt_cell(row.rho_formula) << ','
       << fmt_cell(row.rho_formula_unc);
    for (size_t k = 0; k < row.rho_stab.size(); ++k) {
      os << ',';
      if (row.rho_stab[k])
        os << fmt_real(*row.rho_stab[k]);
      else
        os << row.stab_status[k];
    }
    os << ',' << fmt_cell(row.rho_resolvent) << ',' << fmt_cell(row.rho_resolvent_unc)
       << ',' << fmt_cell(row.delta_oracle_rel) << ',' << (row.trend_flag ? 1 : 0)
       << ',' << row.status << "\n";
  }
}

namespace {

nlohmann::json row_to_json(const ComparisonRow& row,
                           const std::vector<Index>& schedule) {
  nlohmann::json j;
  j["lambda"] = row.lambda;
  auto set_opt = [&](const char* key, const std::optional<Real>& v) {
    if (v)
      j[key] = *v;
    else
      j[key] = nullptr;
  };
  set_opt("rho_formula", row.rho_formula);
  set_opt("rho_formula_unc", row.rho_formula_unc);
  nlohmann::json stab = nlohmann::json::object();
  for (size_t k = 0; k < schedule.size(); ++k) {
    const std::string key = std::to_string(schedule[k]);
    if (row.rho_stab[k])
      stab[key] = *row.rho_stab[k];
    else
      stab[key] = row.stab_status[k];
  }
  j["rho_stab"] = stab;
  set_opt("rho_resolvent", row.rho_resolvent);
  set_opt("rho_resolvent_unc", row.rho_resolvent_unc);
  set_opt("delta_oracle_rel", row.delta_oracle_rel);
  set_opt("delta_stab_final_rel", row.delta_stab_final_rel);
  j["trend_flag"] = row.trend_flag;
  j["status"] = row.status;
  return j;
}

}  // namespace

void write_comparison_json(const ComparisonReport& rep, std::ostream& os) {
  nlohmann::json j;
  if (rep.config.timestamp) j["generated_at"] = iso_now();
  j["rows"] = nlohmann::json::array();
  for (const auto& row : rep.rows)
    j["rows"].push_back(row_to_json(row, rep.config.n_schedule));
  j["summary"] = {{"max_delta_oracle", rep.summary.max_delta_oracle},
                  {"median_delta_oracle", rep.summary.median_delta_oracle},
                  {"max_delta_stab_final", rep.summary.max_delta_stab_final},
                  {"trend_fraction", rep.summary.trend_fraction},
                  {"failed_rows", rep.summary.failed_rows},
                  {"pass", rep.summary.pass}};
  os << j.dump(2) << "\n";
}

void write_route_csv(const RouteReport& rep, bool timestamp, std::ostream& os) {
  if (timestamp) os << "# generated_at=" << iso_now() << "\n";
  os << "lambda";
  for (const auto& c : rep.columns) os << ',' << c << ',' << c << "_unc";
  os << ",status\n";
  for (const auto& row : rep.rows) {
    os << fmt_real(row.lambda);
    for (size_t k = 0; k < rep.columns.size(); ++k)
      os << ',' << fmt_cell(row.values[k]) << ',' << fmt_cell(row.uncertainties[k]);
    os << ',' << row.status << "\n";
  }
}

void write_route_json(const RouteReport& rep, bool timestamp, std::ostream& os) {
  nlohmann::json j;
  if (timestamp) j["generated_at"] = iso_now();
  j["rows"] = nlohmann::json::array();
  for (const auto& row : rep.rows) {
    nlohmann::json r;
    r["lambda"] = row.lambda;
    for (size_t k = 0; k < rep.columns.size(); ++k) {
      if (row.values[k])
        r[rep.columns[k]] = *row.values[k];
      else
        r[rep.columns[k]] = nullptr;
      if (row.uncertainties[k]) r[rep.columns[k] + "_unc"] = *row.uncertainties[k];
    }
    r["status"] = row.status;
    j["rows"].push_back(r);
  }
  os << j.dump(2) << "\n";
}

void write_invariants_csv(const InvariantReport& rep, bool timestamp,
                          std::ostream& os) {
  if (timestamp) os << "# generated_at=" << iso_now() << "\n";
  os << "invariant,measured,threshold,pass,detail\n";
  for (const auto& e : rep.entries)
    os << e.name << ',' << fmt_real(e.measured) << ',' << fmt_real(e.threshold)
       << ',' << (e.pass ? 1 : 0) << ',' << e.detail << "\n";
}

void write_invariants_json(const InvariantReport& rep, bool timestamp,
                           std::ostream& os) {
  nlohmann::json j;
  if (timestamp) j["generated_at"] = iso_now();
  j["invariants"] = nlohmann::json::array();
  for (const auto& e : rep.entries)
    j["invariants"].push_back({{"name", e.name},
                               {"measured", e.measured},
                               {"threshold", e.threshold},
                               {"pass", e.pass},
                               {"detail", e.detail}});
  j["all_pass"] = rep.all_pass();
  os << j.dump(2) << "\n";
}

}  // namespace jacobi::harness
