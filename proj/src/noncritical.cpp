#include "jacobi/noncritical.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace jacobi::noncritical {

MuPair mu_pm(const CoefficientFamily& family, Index n, Complex lambda) {
  if (n < 2) throw Error("mu_pm: n >= 2 required");
  const CoefficientPair prev = coeffs(family, n - 1);
  const CoefficientPair cur = coeffs(family, n);
  const Real ratio = prev.a / cur.a;
  const Real sr = std::sqrt(ratio);
  const Complex omega = (lambda - cur.b) / (2.0 * cur.a * sr);  // normalized

  Complex nu;  // mu^- / sr, the root with |nu| <= 1 in the closed lower half-plane
  if (lambda.imag() == 0.0 && std::abs(omega.real()) <= 1.0) {
    const Real wr = omega.real();
    nu = Complex(wr, -std::sqrt(std::max(0.0, 1.0 - wr * wr)));
  } else {
    const Complex s = std::sqrt(omega * omega - Complex(1.0));
    const Complex zp = omega + s, zm = omega - s;
    const Complex big = std::abs(zp) >= std::abs(zm) ? zp : zm;
    nu = Complex(1.0) / big;
  }
  MuPair out;
  out.mu_minus = sr * nu;
  out.mu_plus = ratio / out.mu_minus;  // det identity exact to rounding
  return out;
}

EllipticInfo elliptic_info(const CoefficientFamily& family, Index n, Real lambda) {
  if (n < 2) throw Error("elliptic_info: n >= 2 required");
  const CoefficientPair prev = coeffs(family, n - 1);
  const CoefficientPair cur = coeffs(family, n);
  const Real half_width = 2.0 * std::sqrt(prev.a * cur.a);
  EllipticInfo info;
  info.n = n;
  info.lambda_minus_edge = cur.b - half_width;
  info.lambda_plus_edge = cur.b + half_width;
  if (lambda == info.lambda_minus_edge || lambda == info.lambda_plus_edge)
    info.regime = Regime::Parabolic;
  else if (lambda > info.lambda_minus_edge && lambda < info.lambda_plus_edge)
    info.regime = Regime::Elliptic;
  else
    info.regime = Regime::Hyperbolic;
  return info;
}

MResult M_of(const CoefficientFamily& family, Real lambda, const MOptions& opt) {
  // Find the elliptic onset: the last non-elliptic index followed by a clean
  // window, doubling the scan horizon until the window is clean.
  Index last_bad = 1;
  Index horizon = std::max<Index>(opt.min_window, 8);
  while (true) {
    for (Index n = std::max<Index>(2, last_bad + 1); n <= horizon; ++n) {
      if (elliptic_info(family, n, lambda).regime != Regime::Elliptic)
        last_bad = n;
    }
    if (horizon >= last_bad + opt.min_window &&
        horizon >= 2 * std::max<Index>(last_bad, opt.min_window))
      break;
    horizon *= 2;
    if (horizon > opt.ceiling)
      throw NoStabilization("no elliptic onset below ceiling " +
                            std::to_string(opt.ceiling) +
                            " (|d| >= 1 or malformed family?)");
  }
  const Index L = std::max<Index>(2, last_bad + 1);

  // sqrt(a_n) prod_{l=2}^{n} |mu^-_l| is constant for n >= L; evaluate a
  // safe distance past the onset.
  const Index n_eval = std::max<Index>(4 * L, opt.min_window);
  CompensatedSum log_prod;
  for (Index l = 2; l <= n_eval; ++l)
    log_prod.add(std::log(std::abs(mu_pm(family, l, lambda).mu_minus)));
  const Real log_m =
      0.5 * std::log(coeffs(family, n_eval).a) + log_prod.value();

  MResult out;
  out.value = std::exp(log_m);
  out.stabilization_index = L;
  return out;
}

SolutionTrace u_minus_noncritical(const CoefficientFamily& family, Real lambda,
                                  Index n_max, Index n_seed,
                                  const TraceOptions& opt) {
  if (n_seed < 3 || n_max < n_seed)
    throw Error("u_minus_noncritical: need 3 <= n_seed <= n_max");
  const MuPair seed_mu = mu_pm(family, n_seed, lambda);
  if (std::abs(seed_mu.mu_plus - seed_mu.mu_minus) <
      1e-8 * std::abs(seed_mu.mu_minus))
    throw SeedDegenerate("mu^+ and mu^- collapse at n_seed = " +
                         std::to_string(n_seed));

  CompensatedSum log_mag, phase;
  for (Index l = 2; l < n_seed; ++l) {
    const Complex mu = mu_pm(family, l, lambda).mu_minus;
    log_mag.add(std::log(std::abs(mu)));
    phase.add(std::arg(mu));
  }
  SolutionTrace t =
      trace_from_seed(family, lambda, n_max, n_seed, 1.0,
                      seed_mu.mu_minus * opt.seed_skew, log_mag.value(),
                      phase.value());
  t.seed_index = n_seed;
  t.method = TraceMethod::BackwardRecurrence;
  return t;
}

NonCriticalDensity rho_noncritical(const CoefficientFamily& family, Real lambda,
                                   const Options& opt) {
  if (family.kind != FamilyKind::NonCritical)
    throw Error("rho_noncritical: noncritical family required");
  if (!(std::abs(family.d) < 1.0))
    throw CriticalParameter("d = " + std::to_string(family.d) +
                            "; the noncritical density formula fails at |d| = 1 "
                            "(critical case) and |d| > 1 is discrete-spectrum");

  const MResult m = M_of(family, lambda, opt.m);
  const Index n_seed = std::max(opt.n_seed, 8 * m.stabilization_index);

  const Complex u0_a = [&] {
    const SolutionTrace t = u_minus_noncritical(family, lambda, n_seed, n_seed);
    const CoefficientPair c1 = coeffs(family, 1);
    return (Complex(lambda) - c1.b) * t.value(1) - c1.a * t.value(2);
  }();
  Complex u0 = u0_a;
  Real seed_spread = 0.0;
  if (opt.seed_doubling) {
    const SolutionTrace t =
        u_minus_noncritical(family, lambda, 2 * n_seed, 2 * n_seed);
    const CoefficientPair c1 = coeffs(family, 1);
    const Complex u0_b = (Complex(lambda) - c1.b) * t.value(1) - c1.a * t.value(2);
    seed_spread = std::abs(u0_b - u0_a) / std::abs(u0_b);
    u0 = u0_b;
  }

  const Real sq = std::sqrt(1.0 - family.d * family.d);
  const Real m2 = m.value * m.value;

  NonCriticalDensity out;
  out.M = m.value;
  out.stabilization_index = m.stabilization_index;
  out.u0_minus = u0;
  out.psi = u0 / (Complex(0.0, 2.0) * sq * m2);
  out.value_alt = 1.0 / (4.0 * kPi * sq * std::norm(out.psi) * m2);
  out.n_seed = opt.seed_doubling ? 2 * n_seed : n_seed;

  const Real value = sq * m2 / (kPi * std::norm(u0));
  out.density = {lambda, value, value * 2.0 * seed_spread,
                 DensityRoute::NonCriticalFormula};
  return out;
}

}  // namespace jacobi::noncritical
