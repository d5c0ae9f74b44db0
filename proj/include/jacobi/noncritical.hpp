#pragma once

#include "jacobi/coefficients.hpp"
#include "jacobi/trace.hpp"
#include "jacobi/types.hpp"

namespace jacobi::noncritical {

struct MuPair {
  Complex mu_plus;
  Complex mu_minus;
};

/// Eigenvalues of the transfer matrix B_n, normalized so that
/// mu^-/sqrt(a_{n-1}/a_n) lies in the closed lower half-disc; their product
/// is a_{n-1}/a_n.  Parabolic points return the double root for both.
MuPair mu_pm(const CoefficientFamily& family, Index n, Complex lambda);

enum class Regime { Elliptic, Hyperbolic, Parabolic };

struct EllipticInfo {
  Index n = 2;
  Real lambda_minus_edge = 0.0;  // b_n - 2 sqrt(a_{n-1} a_n)
  Real lambda_plus_edge = 0.0;   // b_n + 2 sqrt(a_{n-1} a_n)
  Regime regime = Regime::Elliptic;
};

EllipticInfo elliptic_info(const CoefficientFamily& family, Index n, Real lambda);

struct MOptions {
  Index ceiling = Index(1) << 20;
  Index min_window = 64;  // clean elliptic run required past the last bad index
};

struct MResult {
  Real value = 0.0;
  Index stabilization_index = 2;  // L(lambda): elliptic from here on
};

/// M(lambda) = lim sqrt(a_n) prod_{l=2}^{n} |mu^-_l|.  In the elliptic
/// regime |mu^-_l|^2 telescopes against a_n, so the partial products are
/// exactly constant past L(lambda); the value is read off there.
MResult M_of(const CoefficientFamily& family, Real lambda, const MOptions& opt = {});

struct TraceOptions {
  Complex seed_skew = 1.0;
};

/// Subdominant solution with the index-local WKB seed
/// (u_{N-1}, u_N) = (prod_{l=2}^{N-1} mu^-_l) (1, mu^-_N), recursed backward.
SolutionTrace u_minus_noncritical(const CoefficientFamily& family, Real lambda,
                                  Index n_max, Index n_seed,
                                  const TraceOptions& opt = {});

struct Options {
  Index n_seed = Index(1) << 14;
  bool seed_doubling = true;
  MOptions m;
};

struct NonCriticalDensity {
  DensityResult density;
  Real M = 0.0;
  Index stabilization_index = 2;
  Complex u0_minus;
  Complex psi;
  Real value_alt = 0.0;  // 1/(4 pi sqrt(1-d^2) |psi|^2 M^2)
  Index n_seed = 0;
};

/// rho'(lambda) = sqrt(1-d^2) M^2 / (pi |u_0^-|^2) on the real line.
/// Throws CriticalParameter when |d| >= 1.
NonCriticalDensity rho_noncritical(const CoefficientFamily& family, Real lambda,
                                   const Options& opt = {});

}  // namespace jacobi::noncritical
