#include "jacobi/trace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace jacobi {

namespace {

constexpr Real kRescaleHi = 1e120;
constexpr Real kRescaleLo = 1e-120;

void require_covered(const SolutionTrace& t, Index n, const char* who) {
  if (!t.covers(n))
    throw Error(std::string(who) + ": index " + std::to_string(n) +
                " outside trace range [" + std::to_string(t.n_lo) + ", " +
                std::to_string(t.n_hi) + "]");
}

}  // namespace

Real SolutionTrace::log_abs(Index n) const {
  require_covered(*this, n, "SolutionTrace::log_abs");
  return log_mag[size_t(n - n_lo)];
}

Real SolutionTrace::arg(Index n) const {
  require_covered(*this, n, "SolutionTrace::arg");
  return phase[size_t(n - n_lo)];
}

Complex SolutionTrace::value(Index n) const {
  const Real lm = log_abs(n);
  if (lm == -std::numeric_limits<Real>::infinity()) return 0.0;
  return std::exp(lm) * cis(arg(n));
}

Complex SolutionTrace::value_rel(Index n, Real log_offset) const {
  const Real lm = log_abs(n);
  if (lm == -std::numeric_limits<Real>::infinity()) return 0.0;
  return std::exp(lm - log_offset) * cis(arg(n));
}

void unwrap_phases(std::vector<Real>& raw) {
  for (size_t i = 1; i < raw.size(); ++i)
    raw[i] = raw[i - 1] + wrap_phase(raw[i] - raw[i - 1]);
}

SolutionTrace trace_from_seed(const CoefficientFamily& family, Complex lambda,
                              Index n_max, Index seed_index, Complex v_prev,
                              Complex v_at, Real seed_log, Real seed_phase) {
  if (seed_index < 2 || seed_index > n_max)
    throw Error("trace_from_seed: need 2 <= seed_index <= n_max");

  const Index count = n_max;  // indices 1..n_max
  std::vector<Real> lm(static_cast<size_t>(count)), raw(static_cast<size_t>(count));

  // Mantissa pair plus a running log offset; rescaled when leaving a safe
  // magnitude window so products of 10^5+ factors cannot overflow.
  auto store = [&](Index n, Complex v, Real off) {
    const Real a = std::abs(v);
    lm[size_t(n - 1)] =
        a == 0.0 ? -std::numeric_limits<Real>::infinity() : std::log(a) + off + seed_log;
    raw[size_t(n - 1)] = std::arg(v);
  };
  auto renorm = [](Complex& x, Complex& y, Real& off) {
    const Real m = std::max(std::abs(x), std::abs(y));
    if (m > kRescaleHi || (m < kRescaleLo && m > 0.0)) {
      x /= m;
      y /= m;
      off += std::log(m);
    }
  };

  // Backward sweep: u_{n-1} = ((lambda - b_n) u_n - a_n u_{n+1}) / a_{n-1}.
  {
    Complex u_n = v_prev, u_np1 = v_at;  // at (seed_index-1, seed_index)
    Real off = 0.0;
    store(seed_index, u_np1, off);
    store(seed_index - 1, u_n, off);
    CoefficientPair chi = coeffs(family, seed_index - 1);
    for (Index n = seed_index - 1; n >= 2; --n) {
      const CoefficientPair clo = coeffs(family, n - 1);
      const Complex u_nm1 = ((lambda - chi.b) * u_n - chi.a * u_np1) / clo.a;
      u_np1 = u_n;
      u_n = u_nm1;
      chi = clo;
      renorm(u_n, u_np1, off);
      store(n - 1, u_n, off);
    }
  }

  // Forward sweep: u_{n+1} = ((lambda - b_n) u_n - a_{n-1} u_{n-1}) / a_n.
  if (seed_index < n_max) {
    Complex u_nm1 = v_prev, u_n = v_at;
    Real off = 0.0;
    CoefficientPair cprev = coeffs(family, seed_index - 1);
    for (Index n = seed_index; n < n_max; ++n) {
      const CoefficientPair cn = coeffs(family, n);
      const Complex u_np1 = ((lambda - cn.b) * u_n - cprev.a * u_nm1) / cn.a;
      u_nm1 = u_n;
      u_n = u_np1;
      cprev = cn;
      renorm(u_nm1, u_n, off);
      store(n + 1, u_n, off);
    }
  }

  unwrap_phases(raw);
  for (Real& ph : raw) ph += seed_phase;

  SolutionTrace t;
  t.lambda = lambda;
  t.n_lo = 1;
  t.n_hi = n_max;
  t.log_mag = std::move(lm);
  t.phase = std::move(raw);
  t.seed_index = seed_index;
  t.method = TraceMethod::BackwardRecurrence;
  return t;
}

SolutionTrace conjugate_trace(const SolutionTrace& t) {
  SolutionTrace c = t;
  for (Real& ph : c.phase) ph = -ph;
  c.lambda = std::conj(t.lambda);
  return c;
}

Real max_recurrence_residual(const SolutionTrace& t, const CoefficientFamily& family,
                             Index lo, Index hi) {
  lo = std::max(lo, t.n_lo + 1);
  hi = std::min(hi, t.n_hi - 1);
  Real worst = 0.0;
  for (Index n = lo; n <= hi; ++n) {
    // Evaluate with the local scale factored out so the ratio is exact.
    const Real ref = t.log_abs(n);
    const Complex um = t.value_rel(n - 1, ref), uc = t.value_rel(n, ref),
                  up = t.value_rel(n + 1, ref);
    const CoefficientPair cm = coeffs(family, n - 1);
    const CoefficientPair cn = coeffs(family, n);
    const Complex r = cm.a * um + (cn.b - t.lambda) * uc + cn.a * up;
    const Real denom = std::abs(cm.a * um) + std::abs(cn.a * up) +
                       std::abs((cn.b - t.lambda) * uc);
    if (denom > 0.0) worst = std::max(worst, std::abs(r) / denom);
  }
  return worst;
}

Complex trace_wronskian(const SolutionTrace& u, const SolutionTrace& v,
                        const CoefficientFamily& family, Index n) {
  require_covered(u, n + 1, "trace_wronskian");
  require_covered(v, n + 1, "trace_wronskian");
  const Real a_n = coeffs(family, n).a;
  const Real t1 = u.log_abs(n) + v.log_abs(n + 1);
  const Real t2 = u.log_abs(n + 1) + v.log_abs(n);
  const Real m = std::max(t1, t2);
  if (m == -std::numeric_limits<Real>::infinity()) return 0.0;
  const Complex c1 = std::exp(t1 - m) * cis(u.arg(n) + v.arg(n + 1));
  const Complex c2 = std::exp(t2 - m) * cis(u.arg(n + 1) + v.arg(n));
  return a_n * (c1 - c2) * std::exp(m);
}

}  // namespace jacobi
