#pragma once

#include <optional>
#include <vector>

#include "jacobi/coefficients.hpp"
#include "jacobi/orthopoly.hpp"
#include "jacobi/types.hpp"

namespace jacobi::stabilized {

/// The matrix with entries frozen at (a_N, b_N) from row N on; purely a.c.
/// on the band (b_N - 2a_N, b_N + 2a_N).
struct StabilizedModel {
  Index N = 1;
  Real a = 1.0;
  Real b = 0.0;

  Real band_lo() const { return b - 2.0 * a; }
  Real band_hi() const { return b + 2.0 * a; }
  Real band_width() const { return 4.0 * a; }
  bool inside_band(Real lambda, Real margin_frac = 0.0) const {
    const Real m = margin_frac * band_width();
    return lambda > band_lo() + m && lambda < band_hi() - m;
  }
};

StabilizedModel stabilized_model(const CoefficientFamily& family, Index N);

enum class BandRegime { OnBand, OffBand };

struct BranchValue {
  Complex z;
  BandRegime regime = BandRegime::OffBand;
};

/// Characteristic root of the constant-tail recurrence: on the real band
/// w - i sqrt(1 - w^2) with w = (lambda - b)/(2a) (|z| = 1, Im z <= 0);
/// elsewhere the root of z + 1/z = 2w with |z| < 1, picked by explicit
/// magnitude comparison.  Band edges give z = +-1, OnBand.
BranchValue z_branch(Complex lambda, Real a, Real b);

/// Spectral density of the stabilized matrix,
///   sqrt(1 - w^2) / (pi a_N |P_{N+1} - z_N P_N|^2),
/// with P from the original family.  Throws OutsideBand off the open band.
DensityResult rho_stabilized(const CoefficientFamily& family, Index N, Real lambda);

struct PhiTheta {
  Complex phi;
  Complex theta;
};

/// Coefficients of P, Q in the basis of the constant-tail solutions z^{-n},
/// z^{n}; z powers handled in log-polar form.  Throws BandEdge when the
/// denominator z - 1/z vanishes.
PhiTheta phi_theta(const CoefficientFamily& family, Index N, Complex lambda);

enum class WeylRoute { PhiTheta, Resolvent };

struct WeylValue {
  Complex m;
  WeylRoute route = WeylRoute::PhiTheta;
};

/// Weyl function of the stabilized matrix, m_N = -Theta_N / Phi_N, computed
/// through the prefactor-free ratio.  Throws ZeroPhi at degeneracies.
WeylValue weyl_m_stabilized(const CoefficientFamily& family, Index N, Complex lambda);

/// Im m_N / pi through the |Phi_N|^2 route (tests the Appendix identity).
Real rho_from_phi(const CoefficientFamily& family, Index N, Real lambda);

struct ResolventOptions {
  Real trunc_rel_tol = 1e-3;        // stop doubling when |m| moves less than this
  Index trunc_ceiling = Index(1) << 22;
  std::optional<Index> freeze;      // solve against the stabilized matrix
};

/// m(lambda + i eps) of the (possibly frozen) matrix via a truncated complex
/// tridiagonal solve with partial pivoting; truncation doubles from `trunc`
/// until the value stabilizes.
WeylValue resolvent_m(const CoefficientFamily& family, Real lambda, Real eps,
                      Index trunc = 256, const ResolventOptions& opt = {});

struct ResolventDensityOptions {
  std::vector<Real> eps_schedule = {1e-3, 2e-3, 4e-3};  // ascending
  Index trunc = 256;
  // Oracle-grade truncation: the eps extrapolation below cannot repair
  // truncation error, so the per-eps solves run much tighter than the
  // quick-look resolvent_m default.
  ResolventOptions solve{1e-8, Index(1) << 22, std::nullopt};
};

/// Oracle density: Im m(lambda + i eps)/pi extrapolated to eps -> 0 over the
/// schedule (Neville in eps); uncertainty is the spread of the last two
/// extrapolants.
DensityResult resolvent_density(const CoefficientFamily& family, Real lambda,
                                const ResolventDensityOptions& opt = {});

}  // namespace jacobi::stabilized
