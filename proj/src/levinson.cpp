#include "jacobi/levinson.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace jacobi::levinson {

namespace {

Real inf_norm(const Mat2c& m) {
  const Real r0 = std::abs(m(0, 0)) + std::abs(m(0, 1));
  const Real r1 = std::abs(m(1, 0)) + std::abs(m(1, 1));
  return std::max(r0, r1);
}

void require_critical(const CoefficientFamily& family, const char* who) {
  if (family.kind != FamilyKind::Critical)
    throw Error(std::string(who) + ": critical family required");
}

}  // namespace

Complex sqrt_chi_direct(Real alpha, Index n, Complex lambda) {
  const Real na = std::pow(Real(n), alpha);
  const Complex num = lambda / na + lambda * lambda / (4.0 * na * na) + alpha / Real(n);
  const Complex den = 1.0 + lambda / (2.0 * na);
  return sqrt_upper(num / (den * den));
}

Real log_abs2_eta_minus(Real alpha, Real lambda, Index n) {
  const Real nn = Real(n);
  const Real t = -alpha / (2.0 * nn) +
                 alpha * lambda / (4.0 * std::pow(nn, 1.0 + alpha)) +
                 alpha * alpha / (16.0 * nn * nn);
  return std::log1p(t);
}

Complex eta_minus_value(Real alpha, Complex lambda, Index n) {
  const Real na = std::pow(Real(n), alpha);
  const Complex inner =
      1.0 + lambda / (4.0 * na) + alpha / (lambda * std::pow(Real(n), 1.0 - alpha));
  return 1.0 + lambda / (2.0 * na) + alpha / (4.0 * Real(n)) -
         sqrt_upper(lambda) * sqrt_upper(inner) / std::pow(Real(n), 0.5 * alpha);
}

ChainQuantities chain_at(const CoefficientFamily& family, Index n, Complex lambda) {
  require_critical(family, "chain_at");
  if (n < 2) throw Error("chain_at: n >= 2 required");
  const Real alpha = family.alpha;
  const CoefficientPair cp = coeffs(family, n - 1);
  const CoefficientPair cc = coeffs(family, n);

  const Complex den_prev = lambda - cp.b;
  const Complex den_cur = lambda - cc.b;
  if (std::abs(den_prev) == 0.0 || std::abs(den_cur) == 0.0)
    throw PoleHit("lambda - b vanishes near n = " + std::to_string(n));

  ChainQuantities out;
  out.n = n;
  out.d = den_cur / (2.0 * cc.a);
  out.d_prev = den_prev / (2.0 * cp.a);
  out.c = 1.0 - 4.0 * cp.a * cp.a / (den_prev * den_cur);

  const Real na = std::pow(Real(n), alpha);
  const Complex one_plus = 1.0 + lambda / (2.0 * na);
  if (std::abs(one_plus) == 0.0)
    throw PoleHit("chi pole 1 + lambda/(2 n^alpha) vanishes at n = " +
                  std::to_string(n));
  const Complex chi_num =
      lambda / na + lambda * lambda / (4.0 * na * na) + alpha / Real(n);
  out.chi = chi_num / (one_plus * one_plus);

  // Factored form of sqrt(chi): sqrt(lambda)/n^{alpha/2} *
  // sqrt(1 + lambda/(4 n^alpha) + alpha/(lambda n^{1-alpha})) / (1 + lambda/(2 n^alpha)).
  const Complex inner =
      1.0 + lambda / (4.0 * na) + alpha / (lambda * std::pow(Real(n), 1.0 - alpha));
  const Complex root_part = sqrt_upper(lambda) * sqrt_upper(inner) /
                            std::pow(Real(n), 0.5 * alpha);
  out.sqrt_chi = root_part / one_plus;

  const Real shift = alpha / (4.0 * Real(n));
  out.g_plus = out.sqrt_chi + shift;
  out.g_minus = -out.sqrt_chi + shift;
  out.eta_minus = one_plus + shift - root_part;
  out.h_plus = out.d_prev * (1.0 + out.g_plus);
  out.h_minus = out.d_prev * (1.0 + out.g_minus);
  return out;
}

namespace {

std::vector<Complex> sample_window(const Window& w, int boundary, int interior) {
  std::vector<Complex> pts;
  if (w.is_interval()) {
    // Degenerate window: the segment is its own boundary; interior points
    // off-grid midpoints.
    for (int i = 0; i < boundary; ++i)
      pts.emplace_back(w.re_lo + (w.re_hi - w.re_lo) * Real(i) / Real(boundary - 1),
                       0.0);
    for (int i = 0; i < interior; ++i)
      pts.emplace_back(
          w.re_lo + (w.re_hi - w.re_lo) * (Real(i) + 0.5) / Real(interior), 0.0);
    return pts;
  }
  const int per_edge = std::max(2, boundary / 4);
  for (int i = 0; i < per_edge; ++i) {
    const Real fr = Real(i) / Real(per_edge - 1);
    pts.emplace_back(w.re_lo + (w.re_hi - w.re_lo) * fr, w.im_lo);
    pts.emplace_back(w.re_lo + (w.re_hi - w.re_lo) * fr, w.im_hi);
    pts.emplace_back(w.re_lo, w.im_lo + (w.im_hi - w.im_lo) * fr);
    pts.emplace_back(w.re_hi, w.im_lo + (w.im_hi - w.im_lo) * fr);
  }
  const int nx = 8, ny = std::max(1, interior / 8);
  for (int ix = 0; ix < nx; ++ix)
    for (int iy = 0; iy < ny; ++iy)
      pts.emplace_back(w.re_lo + (w.re_hi - w.re_lo) * (ix + 0.5) / nx,
                       w.im_lo + (w.im_hi - w.im_lo) * (iy + 0.5) / ny);
  return pts;
}

bool admissible_at(const CoefficientFamily& family, const Window& window, Index n0,
                   const std::vector<Complex>& grid, int n_samples) {
  const Real alpha = family.alpha;
  std::vector<Index> ns;
  for (int j = 0; j < n_samples; ++j) {
    const Real fr = Real(j) / Real(n_samples - 1);
    const Index n = std::max<Index>(2, Index(std::llround(n0 * std::pow(8.0, fr))));
    if (ns.empty() || ns.back() != n) ns.push_back(n);
  }
  for (Index n : ns) {
    // Roots and pole of chi_n must stay outside the window.
    const Real na = std::pow(Real(n), alpha);
    const Real disc = 1.0 - alpha / Real(n);
    if (disc >= 0.0) {
      const Real root = std::sqrt(disc);
      if (window.contains(2.0 * na * (-1.0 + root))) return false;
      if (window.contains(2.0 * na * (-1.0 - root))) return false;
    }
    if (window.contains(-2.0 * na)) return false;
    for (const Complex& lam : grid) {
      ChainQuantities q;
      try {
        q = chain_at(family, n, lam);
      } catch (const PoleHit&) {
        return false;
      }
      if (std::abs(q.eta_minus) < 0.5) return false;
      if (std::abs(q.g_plus) > 0.5 || std::abs(q.g_minus) > 0.5) return false;
      if (q.sqrt_chi.real() < -1e-12) return false;
      if (std::abs(q.d_prev) < 0.25) return false;
    }
  }
  return true;
}

}  // namespace

Index select_N0(const CoefficientFamily& family, const Window& window,
                const N0Options& opt) {
  require_critical(family, "select_N0");
  const std::vector<Complex> grid =
      sample_window(window, opt.boundary_points, opt.interior_points);
  for (Index n0 = std::max<Index>(2, opt.start); n0 <= opt.ceiling; n0 *= 2) {
    if (admissible_at(family, window, n0, grid, opt.n_samples)) return n0;
  }
  throw NoAdmissibleN0("no admissible N0 below ceiling " +
                       std::to_string(opt.ceiling) +
                       " (window too close to 0 or too wide)");
}

Real DiagonalSystem::weighted_sum() const {
  CompensatedSum s;
  for (size_t k = 0; k < lam.size(); ++k)
    s.add(std::abs(lam[k]) * inf_norm(rem[k]));
  return s.value();
}

VolterraSolution volterra_solve(const DiagonalSystem& system, Index n_max) {
  const Index lo = system.start;
  if (n_max < lo) throw Error("volterra_solve: n_max >= start required");
  if (n_max - lo + 1 > system.count())
    throw Error("volterra_solve: sequences not provided through n_max");
  for (Index k = lo; k <= n_max; ++k)
    if (std::abs(system.lam[size_t(k - lo)]) == 0.0)
      throw ZeroLambda("lambda_" + std::to_string(k) + " = 0");

  // Contraction constant: supplied, or estimated from the largest running
  // product of 1/|l| (max-subarray on -log|l|) with a safety factor 2.
  Real C = 1.0;
  if (system.contraction_bound) {
    C = std::max(1.0, *system.contraction_bound);
  } else {
    Real best = 0.0, cur = 0.0;
    for (Index k = lo; k <= n_max; ++k) {
      cur = std::max(0.0, cur - std::log(std::abs(system.lam[size_t(k - lo)])));
      best = std::max(best, cur);
    }
    C = 2.0 * std::max(1.0, std::exp(best));
  }
  const Real weight = C * C + 1.0;

  const Index count = n_max - lo + 2;  // values for n = lo .. n_max+1
  VolterraSolution sol;
  sol.start = lo;
  sol.values.assign(size_t(count), Vec2c(0.0, 1.0));
  sol.tail_bounds.assign(size_t(count), 0.0);
  sol.terms_used = n_max - lo + 1;

  const Vec2c e_minus(0.0, 1.0);
  Vec2c s(0.0, 0.0);  // running sum_{k>n} D_{nk} l_k R_k x~_k, pulled back per step
  CompensatedSum tail;
  for (Index n = n_max; n >= lo; --n) {
    const Complex l = system.lam[size_t(n - lo)];
    const Mat2c& R = system.rem[size_t(n - lo)];
    const Complex inv2 = 1.0 / (l * l);
    const Vec2c t(inv2 * s(0), s(1));
    Mat2c M;
    M.row(0) = R.row(0) / l;
    M.row(1) = R.row(1) * l;
    const Mat2c A = Mat2c::Identity() + M;
    const Complex det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    if (std::abs(det) == 0.0)
      throw SingularSystem("I + D l R singular at n = " + std::to_string(n));
    const Vec2c rhs = e_minus - t;
    Vec2c x;
    x(0) = (A(1, 1) * rhs(0) - A(0, 1) * rhs(1)) / det;
    x(1) = (A(0, 0) * rhs(1) - A(1, 0) * rhs(0)) / det;
    s = M * x + t;
    sol.values[size_t(n - lo)] = x;
    tail.add(weight * std::abs(l) * inf_norm(R));
    sol.tail_bounds[size_t(n - lo)] = std::expm1(tail.value());
  }
  return sol;
}

}  // namespace jacobi::levinson
