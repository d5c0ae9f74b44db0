#include "jacobi/stabilized.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace jacobi::stabilized {

StabilizedModel stabilized_model(const CoefficientFamily& family, Index N) {
  if (N < 1) throw Error("stabilized_model: N >= 1 required");
  const CoefficientPair c = coeffs(family, N);
  return {N, c.a, c.b};
}

BranchValue z_branch(Complex lambda, Real a, Real b) {
  const Complex w = (lambda - b) / (2.0 * a);
  if (lambda.imag() == 0.0 && std::abs(w.real()) <= 1.0) {
    const Real wr = w.real();
    const Real s = std::sqrt(std::max(0.0, 1.0 - wr * wr));
    return {Complex(wr, -s), BandRegime::OnBand};
  }
  // Roots of z^2 - 2wz + 1 multiply to 1; divide out the larger one instead
  // of subtracting, which cancels badly near the edges.
  const Complex s = std::sqrt(w * w - Complex(1.0));
  const Complex zp = w + s, zm = w - s;
  const Complex big = std::abs(zp) >= std::abs(zm) ? zp : zm;
  return {Complex(1.0) / big, BandRegime::OffBand};
}

DensityResult rho_stabilized(const CoefficientFamily& family, Index N, Real lambda) {
  const StabilizedModel model = stabilized_model(family, N);
  const Real w = (lambda - model.b) / (2.0 * model.a);
  if (!(std::abs(w) < 1.0))
    throw OutsideBand("lambda = " + std::to_string(lambda) + " not inside (" +
                      std::to_string(model.band_lo()) + ", " +
                      std::to_string(model.band_hi()) + ")");
  const PolySeq ps = orthopoly(family, lambda, N);
  const Complex z = z_branch(lambda, model.a, model.b).z;
  const Complex t = ps.P(N + 1) - z * ps.P(N);
  const Real value = std::sqrt(1.0 - w * w) / (kPi * model.a * std::norm(t));
  return {lambda, value, 0.0, DensityRoute::Stabilized};
}

namespace {

// z^k for |z| <= 1 without underflow surprises: log-polar assembly.
Complex z_power(Complex z, Index k) {
  const Real lm = Real(k) * std::log(std::abs(z));
  const Real ph = Real(k) * std::arg(z);
  return std::exp(lm) * cis(ph);
}

}  // namespace

PhiTheta phi_theta(const CoefficientFamily& family, Index N, Complex lambda) {
  const StabilizedModel model = stabilized_model(family, N);
  const Complex z = z_branch(lambda, model.a, model.b).z;
  const Complex denom = z - Complex(1.0) / z;
  if (std::abs(denom) < 1e-14)
    throw BandEdge("z - 1/z vanishes at lambda = " + std::to_string(lambda.real()));
  const PolySeq ps = orthopoly(family, lambda, N);
  const Complex zN = z_power(z, N);
  PhiTheta out;
  out.phi = zN * (ps.P(N) * z - ps.P(N + 1)) / denom;
  out.theta = zN * (ps.Q(N) * z - ps.Q(N + 1)) / denom;
  return out;
}

WeylValue weyl_m_stabilized(const CoefficientFamily& family, Index N,
                            Complex lambda) {
  const StabilizedModel model = stabilized_model(family, N);
  const Complex z = z_branch(lambda, model.a, model.b).z;
  const PolySeq ps = orthopoly(family, lambda, N);
  // m = -Theta/Phi; the z^N and 1/(z - 1/z) prefactors cancel in the ratio.
  const Complex denom = ps.P(N) * z - ps.P(N + 1);
  if (std::abs(denom) == 0.0)
    throw ZeroPhi("Phi_N vanishes at lambda = " + std::to_string(lambda.real()));
  return {-(ps.Q(N) * z - ps.Q(N + 1)) / denom, WeylRoute::PhiTheta};
}

Real rho_from_phi(const CoefficientFamily& family, Index N, Real lambda) {
  const StabilizedModel model = stabilized_model(family, N);
  const Complex z = z_branch(lambda, model.a, model.b).z;
  const PhiTheta pt = phi_theta(family, N, lambda);
  const Complex denom =
      2.0 * kPi * Complex(0.0, 1.0) * model.a * (z - 1.0 / z) * std::norm(pt.phi);
  return (Complex(1.0) / denom).real();
}

namespace {

// First entry of (T - z)^{-1} e_1 for the truncated tridiagonal T, by LU
// with partial pivoting on the band (one extra superdiagonal of fill-in).
Complex green_first_entry(const CoefficientFamily& family,
                          const std::optional<Index>& freeze, Complex z, Index m) {
  std::vector<Complex> d(static_cast<size_t>(m)), u1(static_cast<size_t>(m), 0.0), u2(static_cast<size_t>(m), 0.0),
      r(size_t(m), 0.0);
  std::vector<Real> sub(size_t(m), 0.0);  // sub[i] couples rows i-1, i
  for (Index i = 0; i < m; ++i) {
    const CoefficientPair c =
        freeze ? coeffs_frozen(family, *freeze, i + 1) : coeffs(family, i + 1);
    d[size_t(i)] = Complex(c.b) - z;
    if (i + 1 < m) u1[size_t(i)] = c.a;
    if (i > 0) sub[size_t(i)] = freeze ? coeffs_frozen(family, *freeze, i).a
                                       : coeffs(family, i).a;
  }
  r[0] = 1.0;

  for (size_t i = 0; i + 1 < size_t(m); ++i) {
    Complex s = sub[i + 1];
    if (std::abs(d[i]) < std::abs(s)) {
      std::swap(d[i], s);                 // s now holds the old pivot
      const Complex t1 = u1[i], t2 = u2[i];
      u1[i] = d[i + 1];
      u2[i] = u1[i + 1];
      d[i + 1] = t1;
      u1[i + 1] = t2;
      std::swap(r[i], r[i + 1]);
    }
    if (std::abs(d[i]) < 1e-300)
      throw SingularSystem("pivot underflow in resolvent solve");
    const Complex mult = s / d[i];
    d[i + 1] -= mult * u1[i];
    u1[i + 1] -= mult * u2[i];
    r[i + 1] -= mult * r[i];
  }

  std::vector<Complex> x(static_cast<size_t>(m));
  for (Index i = m - 1; i >= 0; --i) {
    Complex acc = r[size_t(i)];
    if (i + 1 < m) acc -= u1[size_t(i)] * x[size_t(i + 1)];
    if (i + 2 < m) acc -= u2[size_t(i)] * x[size_t(i + 2)];
    if (std::abs(d[size_t(i)]) < 1e-300)
      throw SingularSystem("pivot underflow in resolvent back-substitution");
    x[size_t(i)] = acc / d[size_t(i)];
  }
  return x[0];
}

}  // namespace

WeylValue resolvent_m(const CoefficientFamily& family, Real lambda, Real eps,
                      Index trunc, const ResolventOptions& opt) {
  if (!(eps > 0.0)) throw Error("resolvent_m: eps > 0 required");
  if (trunc < 100) throw Error("resolvent_m: trunc >= 100 required");
  const Complex z(lambda, eps);
  Complex m_prev = green_first_entry(family, opt.freeze, z, trunc);
  for (Index n = 2 * trunc; n <= opt.trunc_ceiling; n *= 2) {
    const Complex m_cur = green_first_entry(family, opt.freeze, z, n);
    if (std::abs(m_cur - m_prev) < opt.trunc_rel_tol * std::abs(m_cur))
      return {m_cur, WeylRoute::Resolvent};
    m_prev = m_cur;
  }
  throw NoConvergence("resolvent truncation ceiling " +
                      std::to_string(opt.trunc_ceiling) + " reached");
}

DensityResult resolvent_density(const CoefficientFamily& family, Real lambda,
                                const ResolventDensityOptions& opt) {
  const size_t k = opt.eps_schedule.size();
  if (k < 2) throw Error("resolvent_density: need at least two eps values");
  std::vector<Real> eps(opt.eps_schedule);
  std::sort(eps.begin(), eps.end(), std::greater<Real>());  // largest first

  std::vector<Real> f(k);
  for (size_t j = 0; j < k; ++j)
    f[j] = resolvent_m(family, lambda, eps[j], opt.trunc, opt.solve).m.imag() / kPi;

  // Neville extrapolation to eps = 0.  After level L, t[j] is the
  // extrapolant over nodes j..j+L; the uncertainty compares the full table
  // against the one dropping the largest eps.
  std::vector<Real> t(f);
  Real prev_best = t[k - 1];
  for (size_t level = 1; level < k; ++level) {
    for (size_t j = 0; j + level < k; ++j)
      t[j] = t[j + 1] + eps[j + level] * (t[j + 1] - t[j]) / (eps[j] - eps[j + level]);
    if (level + 2 == k) prev_best = t[1];
  }
  const Real value = t[0];
  const Real unc = std::abs(value - prev_best);
  return {lambda, value, unc, DensityRoute::Resolvent};
}

}  // namespace jacobi::stabilized
