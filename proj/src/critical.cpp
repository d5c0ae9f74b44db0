#include "jacobi/critical.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "jacobi/orthopoly.hpp"

namespace jacobi::critical {

namespace {

void require_window_lambda(Real lambda, const char* who) {
  if (!(lambda < 0.0))
    throw Error(std::string(who) + ": real lambda < 0 required");
}

// Richardson step with a known error exponent: removes c * n^{-p} from
// same-lambda values at n and 2n.
Real richardson(Real at_n, Real at_2n, Real p) {
  const Real w = std::pow(2.0, p);
  return at_2n + (at_2n - at_n) / (w - 1.0);
}

}  // namespace

Real H_raw(const CoefficientFamily& family, Real lambda, Index n0, Index n) {
  require_window_lambda(lambda, "H_raw");
  const Real alpha = family.alpha;
  CompensatedSum log_sum;
  for (Index l = n0; l <= n; ++l)
    log_sum.add(0.5 * levinson::log_abs2_eta_minus(alpha, lambda, l));
  return std::exp(0.25 * alpha * std::log(Real(n)) + log_sum.value());
}

HResult H_of(const CoefficientFamily& family, Real lambda, Index n0,
             const HOptions& opt) {
  if (family.kind != FamilyKind::Critical)
    throw Error("H_of: critical family required");
  require_window_lambda(lambda, "H_of");
  const Real alpha = family.alpha;
  const Index n1 = std::max<Index>(opt.n1, 4 * n0);

  Real logH[3];  // at n1, 2 n1, 4 n1
  CompensatedSum log_sum;
  Index check = 0;
  for (Index l = n0; l <= 4 * n1; ++l) {
    log_sum.add(0.5 * levinson::log_abs2_eta_minus(alpha, lambda, l));
    if (l == n1 || l == 2 * n1 || l == 4 * n1) {
      logH[check++] =
          0.25 * alpha * std::log(Real(l)) + log_sum.value();
    }
  }

  // The log-sequence converges like c1 n^{-alpha} + c2 n^{-min(1, 2 alpha)}.
  const Real p1 = alpha;
  const Real p2 = std::min(1.0, 2.0 * alpha);
  const Real lvl1_a = richardson(logH[0], logH[1], p1);
  const Real lvl1_b = richardson(logH[1], logH[2], p1);
  const Real lvl2 = richardson(lvl1_a, lvl1_b, p2);

  HResult out;
  out.value = std::exp(lvl2);
  out.uncertainty = out.value * std::abs(lvl2 - lvl1_b);
  return out;
}

SolutionTrace u_minus(const CoefficientFamily& family, Real lambda, Index n_max,
                      Index n_seed, Index n0, const TraceOptions& opt) {
  require_window_lambda(lambda, "u_minus");
  if (n_seed < 8 * n0)
    throw Error("u_minus: n_seed >= 8 N0 required (n_seed = " +
                std::to_string(n_seed) + ", N0 = " + std::to_string(n0) + ")");
  if (n_max < n_seed) throw Error("u_minus: n_max >= n_seed required");

  const levinson::ChainQuantities q = levinson::chain_at(family, n_seed, lambda);
  if (std::abs(q.h_minus - q.h_plus) < 1e-8)
    throw SeedDegenerate("h^+ and h^- collapse at n_seed = " +
                         std::to_string(n_seed));

  // Seed factor prod_{l=n0}^{n_seed-1} eta^-_l in log-polar form; magnitude
  // from the closed form of |eta^-|^2, phase accumulated directly.
  CompensatedSum log_mag, phase;
  for (Index l = n0; l < n_seed; ++l) {
    log_mag.add(0.5 * levinson::log_abs2_eta_minus(family.alpha, lambda, l));
    phase.add(std::arg(levinson::eta_minus_value(family.alpha, lambda, l)));
  }

  SolutionTrace t = trace_from_seed(family, lambda, n_max, n_seed, 1.0,
                                    q.h_minus * opt.seed_skew, log_mag.value(),
                                    phase.value());
  t.seed_index = n_seed;
  t.n0 = n0;
  t.method = TraceMethod::BackwardRecurrence;
  return t;
}

ChainSolution u_minus_chain(const CoefficientFamily& family, Real lambda,
                            Index n_hi, Index n0) {
  require_window_lambda(lambda, "u_minus_chain");
  if (n0 < 2 || n_hi <= n0) throw Error("u_minus_chain: need 2 <= n0 < n_hi");

  // Chain data over [n0, n_hi + 1].
  std::vector<levinson::ChainQuantities> q(static_cast<size_t>(n_hi - n0 + 2));
  for (Index n = n0; n <= n_hi + 1; ++n)
    q[size_t(n - n0)] = levinson::chain_at(family, n, lambda);

  levinson::DiagonalSystem sys;
  sys.start = n0;
  sys.contraction_bound = 1.0;  // Re sqrt(chi) >= 0 past N0 gives C = 1
  sys.lam.reserve(size_t(n_hi - n0 + 1));
  sys.rem.reserve(size_t(n_hi - n0 + 1));
  for (Index n = n0; n <= n_hi; ++n) {
    const auto& cur = q[size_t(n - n0)];
    const auto& nxt = q[size_t(n - n0 + 1)];
    const Complex sp = sqrt_upper(1.0 + cur.g_plus);
    const Complex sm = sqrt_upper(1.0 + cur.g_minus);
    sys.lam.push_back(sp / sm);
    const Complex delta = nxt.g_minus - nxt.g_plus;  // -2 sqrt(chi_{n+1})
    const Complex A =
        nxt.g_plus - cur.g_plus + cur.g_plus * nxt.g_plus - cur.c;
    const Complex B =
        nxt.g_minus - cur.g_minus + cur.g_minus * nxt.g_minus - cur.c;
    Mat2c R;
    R(0, 0) = A / delta;
    R(0, 1) = B / delta;
    R(1, 0) = -R(0, 0);
    R(1, 1) = -R(0, 1);
    R /= sp * sm;
    sys.rem.push_back(R);
  }

  const levinson::VolterraSolution sol = levinson::volterra_solve(sys, n_hi);

  // vec u_n = pref(n) [[1, 1], [h^+_n, h^-_n]] x~_n with
  // pref(n0) = d_{n0-1} and pref(n+1)/pref(n) = d_{n-1}(1 + g^-_n) = h^-_n.
  const Index count = n_hi - n0 + 2;  // n = n0-1 .. n_hi
  std::vector<Real> lm(static_cast<size_t>(count)), raw(static_cast<size_t>(count));
  Real run_log = std::log(std::abs(q[0].d_prev));
  Real run_arg = std::arg(q[0].d_prev);
  {
    const Vec2c& x0 = sol.at(n0);
    const Complex u_prev = x0(0) + x0(1);
    const Complex u_at = q[0].h_plus * x0(0) + q[0].h_minus * x0(1);
    lm[0] = run_log + std::log(std::abs(u_prev));
    raw[0] = run_arg + std::arg(u_prev);
    lm[1] = run_log + std::log(std::abs(u_at));
    raw[1] = run_arg + std::arg(u_at);
  }
  for (Index n = n0 + 1; n <= n_hi; ++n) {
    const Complex grow = q[size_t(n - 1 - n0)].h_minus;
    run_log += std::log(std::abs(grow));
    run_arg += std::arg(grow);
    const auto& cur = q[size_t(n - n0)];
    const Vec2c& x = sol.at(n);
    const Complex u_at = cur.h_plus * x(0) + cur.h_minus * x(1);
    lm[size_t(n - n0 + 1)] = run_log + std::log(std::abs(u_at));
    raw[size_t(n - n0 + 1)] = run_arg + std::arg(u_at);
  }
  unwrap_phases(raw);

  ChainSolution out;
  out.trace.lambda = lambda;
  out.trace.n_lo = n0 - 1;
  out.trace.n_hi = n_hi;
  out.trace.log_mag = std::move(lm);
  out.trace.phase = std::move(raw);
  out.trace.seed_index = n_hi;
  out.trace.method = TraceMethod::ChainVolterra;
  out.trace.n0 = n0;
  out.tail_bounds = sol.tail_bounds;
  out.start = n0;
  return out;
}

Complex u0_minus_of(const SolutionTrace& trace, const CoefficientFamily& family) {
  const CoefficientPair c1 = coeffs(family, 1);
  return (trace.lambda - c1.b) * trace.value(1) - c1.a * trace.value(2);
}

namespace {

Index resolve_n0(const CoefficientFamily& family, const Options& opt) {
  if (opt.n0_override) return *opt.n0_override;
  return levinson::select_N0(family, opt.window, opt.n0);
}

}  // namespace

CriticalDensity rho_critical(const CoefficientFamily& family, Real lambda,
                             const Options& opt) {
  if (family.kind != FamilyKind::Critical)
    throw Error("rho_critical: critical family required");
  require_window_lambda(lambda, "rho_critical");

  const Index n0 = resolve_n0(family, opt);
  const Index n_seed = std::max(opt.n_seed, 8 * n0);

  const Complex u0_a =
      u0_minus_of(u_minus(family, lambda, n_seed, n_seed, n0), family);
  Complex u0 = u0_a;
  Real seed_spread = 0.0;
  if (opt.seed_doubling) {
    const Complex u0_b =
        u0_minus_of(u_minus(family, lambda, 2 * n_seed, 2 * n_seed, n0), family);
    // The density uses |u_0^-| only; the seed-dependent overall phase drift
    // of the trace is immaterial, so the robustness spread is in modulus.
    seed_spread = std::abs(std::abs(u0_b) - std::abs(u0_a)) / std::abs(u0_b);
    u0 = u0_b;
  }

  const HResult h = H_of(family, lambda, n0, opt.h);
  const Real sq = std::sqrt(-lambda);
  const Real h2 = h.value * h.value;

  CriticalDensity out;
  out.H = h.value;
  out.H_uncertainty = h.uncertainty;
  out.u0_minus = u0;
  out.psi = u0 / (Complex(0.0, 2.0) * sq * h2);
  out.value_alt = 1.0 / (4.0 * kPi * sq * std::norm(out.psi) * h2);
  out.n0 = n0;
  out.n_seed = opt.seed_doubling ? 2 * n_seed : n_seed;

  const Real value = sq * h2 / (kPi * std::norm(u0));
  const Real rel_unc = 2.0 * h.uncertainty / h.value + 2.0 * seed_spread;
  out.density = {lambda, value, value * rel_unc, DensityRoute::CriticalFormula};
  return out;
}

std::vector<Index> pick_subsequence(const CoefficientFamily& family, Index count,
                                    const SubsequenceOptions& opt) {
  if (family.kind != FamilyKind::Critical)
    throw Error("pick_subsequence: critical family required");
  if (count < 1) throw Error("pick_subsequence: count >= 1 required");
  const Real alpha = family.alpha;
  const Perturbation& pert = family.perturbation;

  Index n1 = std::max<Index>(2, opt.n1);
  bool automatic = false;
  switch (pert.kind) {
    case PerturbationKind::Zero:
      automatic = true;
      break;
    case PerturbationKind::PowerDecay:
      automatic = pert.p_exponent > 1.5 * alpha && pert.q_exponent > 1.5 * alpha;
      break;
    case PerturbationKind::Table: {
      // Past the support the perturbation vanishes and the condition is free.
      automatic = true;
      const Index support =
          Index(std::max(pert.p_table.size(), pert.q_table.size()));
      while (n1 <= support) n1 *= 2;
      break;
    }
  }

  std::vector<Index> out;
  out.reserve(size_t(count));
  if (automatic) {
    Index n = n1;
    for (Index k = 0; k < count; ++k, n *= 2) {
      if (n > opt.ceiling)
        throw NoAdmissibleIndices("geometric schedule exceeds ceiling");
      out.push_back(n);
    }
    return out;
  }

  // Forward scan: keep n with max(|p_n|, |q_n|) n^{alpha/2} <= tol n^{-alpha},
  // spaced at least a factor 2 apart.
  Index last = 0;
  for (Index n = n1; n <= opt.ceiling && Index(out.size()) < count; ++n) {
    if (last != 0 && n < 2 * last) continue;
    const Real kappa =
        std::max(std::abs(pert.p(n)), std::abs(pert.q(n))) * std::pow(Real(n), 0.5 * alpha);
    if (kappa <= opt.tolerance * std::pow(Real(n), -alpha)) {
      out.push_back(n);
      last = n;
    }
  }
  if (Index(out.size()) < count)
    throw NoAdmissibleIndices("scan exhausted ceiling " +
                              std::to_string(opt.ceiling) + " with " +
                              std::to_string(out.size()) + " indices");
  return out;
}

WronskianIdentityReport wronskian_identity_check(const CoefficientFamily& family,
                                                 Real lambda, const Options& opt,
                                                 const TraceOptions& trace_opt) {
  const Index n0 = resolve_n0(family, opt);
  const Index n_seed = std::max(opt.n_seed, 16 * n0);  // half-seed stays valid
  const HResult h = H_of(family, lambda, n0, opt.h);
  const Real target = 2.0 * std::sqrt(-lambda) * h.value * h.value;
  const Complex expected(0.0, -target);

  auto deviation_for = [&](Index seed) {
    const SolutionTrace um =
        u_minus(family, lambda, seed, seed, n0, trace_opt);
    const SolutionTrace up = conjugate_trace(um);
    const std::vector<Index> samples = {2,   10,   100,
                                        1000, std::min<Index>(10000, seed - 1)};
    Complex w0;
    Real spread = 0.0;
    bool first = true;
    for (Index n : samples) {
      if (n + 1 > um.n_hi) continue;
      const Complex w = trace_wronskian(up, um, family, n);
      if (first) {
        w0 = w;
        first = false;
      } else {
        spread = std::max(spread, std::abs(w - w0) / std::abs(w0));
      }
    }
    return std::make_pair(std::abs(w0 - expected) / target,
                          std::make_pair(w0, spread));
  };

  const auto half = deviation_for(n_seed / 2);
  const auto full = deviation_for(n_seed);

  WronskianIdentityReport rep;
  rep.constancy_max_rel = std::max(half.second.second, full.second.second);
  rep.deviation = full.first;
  rep.deviation_half_seed = half.first;
  rep.trend_improving = full.first <= half.first;
  rep.wronskian = full.second.first;
  rep.target = target;
  // Seed-doubling extrapolation: the measured deviation decays like
  // n_seed^{-alpha} with a stable sign, so one Richardson step removes it.
  const Complex w_half = half.second.first, w_full = full.second.first;
  const Complex w_ext =
      w_full + (w_full - w_half) / (std::pow(2.0, family.alpha) - 1.0);
  rep.deviation_extrapolated = std::abs(w_ext - expected) / target;
  return rep;
}

DecompositionReport decomposition_check(const CoefficientFamily& family, Real lambda,
                                        Index window_lo, Index window_hi,
                                        const Options& opt, bool zero_psi_floor) {
  if (window_lo < 1 || window_hi < window_lo)
    throw Error("decomposition_check: bad index window");
  const Index n0 = resolve_n0(family, opt);
  // Window-coupled seed: the trace accuracy then improves as the window
  // grows, so the normalized residual follows the o(1) law of the
  // asymptotics instead of saturating at a fixed-seed floor.
  const Index n_seed = std::max(8 * window_hi, 8 * n0);

  const SolutionTrace um = u_minus(family, lambda, n_seed, n_seed, n0);
  const HResult h = H_of(family, lambda, n0, opt.h);
  const Complex u0 = u0_minus_of(um, family);
  const Complex psi_true =
      u0 / (Complex(0.0, 2.0) * std::sqrt(-lambda) * h.value * h.value);
  const Complex psi = zero_psi_floor ? Complex(0.0) : psi_true;

  const PolySeq ps = orthopoly(family, lambda, window_hi);
  const Real envelope_coeff = 2.0 * std::abs(psi_true) * h.value;

  DecompositionReport rep;
  rep.window_lo = window_lo;
  rep.window_hi = window_hi;
  for (Index n = window_lo; n <= window_hi; ++n) {
    // P_n = Psi u^+_n + conj(Psi) u^-_n = 2 Re(Psi conj(u^-_n)).
    const Complex recon = 2.0 * (psi * std::conj(um.value(n))).real();
    const Real envelope =
        envelope_coeff * std::pow(Real(n), -0.25 * family.alpha);
    rep.max_normalized_error = std::max(
        rep.max_normalized_error, std::abs(ps.P(n) - recon) / envelope);
  }
  return rep;
}

Pipeline::Pipeline(CoefficientFamily family, Options opt)
    : family_(std::move(family)), opt_(std::move(opt)), n0_(resolve_n0(family_, opt_)) {}

CriticalDensity Pipeline::rho(Real lambda) const {
  Options o = opt_;
  o.n0_override = n0_;
  return rho_critical(family_, lambda, o);
}

}  // namespace jacobi::critical
