#pragma once

#include <optional>
#include <vector>

#include "jacobi/coefficients.hpp"
#include "jacobi/levinson.hpp"
#include "jacobi/trace.hpp"
#include "jacobi/types.hpp"

namespace jacobi::critical {

struct HOptions {
  Index n1 = 1'000'000;  // checkpoints n1, 2 n1, 4 n1
};

struct HResult {
  Real value = 0.0;
  Real uncertainty = 0.0;
};

/// H(lambda) = lim n^{alpha/4} prod_{l=N0}^{n} |eta^-_l(lambda)|, accumulated
/// in log space from the closed form of |eta^-|^2 and accelerated over the
/// checkpoints with the known error exponents (alpha, then min(1, 2 alpha)).
HResult H_of(const CoefficientFamily& family, Real lambda, Index n0,
             const HOptions& opt = {});

/// Raw (unaccelerated) n^{alpha/4} prod |eta^-_l| at a single n.
Real H_raw(const CoefficientFamily& family, Real lambda, Index n0, Index n);

struct TraceOptions {
  Complex seed_skew = 1.0;  // test hook: multiplies the second seed component
};

/// The subdominant-normalized solution u^-: seeds (u_{N-1}, u_N) =
/// (prod_{l=N0}^{N-1} eta^-_l) (1, h^-_N) at N = n_seed, then recurses
/// backward to n = 1 and forward to n_max.  Throws SeedDegenerate when
/// h^+ and h^- collapse at the seed.
SolutionTrace u_minus(const CoefficientFamily& family, Real lambda, Index n_max,
                      Index n_seed, Index n0, const TraceOptions& opt = {});

struct ChainSolution {
  SolutionTrace trace;                  // covers [n0 - 1, n_hi]
  std::vector<Real> tail_bounds;        // Volterra certificate per n in [n0, n_hi+1]
  Index start = 0;
  Real tail_bound_at(Index n) const { return tail_bounds[size_t(n - start)]; }
};

/// Validation route: the full diagonalizing-chain + Volterra solution over
/// [n0, n_hi], normalized by its own chain products.
ChainSolution u_minus_chain(const CoefficientFamily& family, Real lambda,
                            Index n_hi, Index n0);

/// u_0^- = (lambda - b_1) u_1 - a_1 u_2 (the a_0 := 1 convention).
Complex u0_minus_of(const SolutionTrace& trace, const CoefficientFamily& family);

struct Options {
  Window window{-4.0, -0.5};
  Index n_seed = Index(1) << 17;
  bool seed_doubling = true;      // uncertainty from n_seed vs 2 n_seed
  HOptions h;
  std::optional<Index> n0_override;
  levinson::N0Options n0;
};

struct CriticalDensity {
  DensityResult density;
  Real H = 0.0;
  Real H_uncertainty = 0.0;
  Complex u0_minus;
  Complex psi;
  Real value_alt = 0.0;  // 1/(4 pi sqrt(-lambda) |psi|^2 H^2)
  Index n0 = 0;
  Index n_seed = 0;
};

/// rho'(lambda) = sqrt(-lambda) H^2 / (pi |u_0^-|^2) on the validated window.
CriticalDensity rho_critical(const CoefficientFamily& family, Real lambda,
                             const Options& opt = {});

struct SubsequenceOptions {
  Index n1 = 32;
  Real tolerance = 16.0;
  Index ceiling = Index(1) << 24;
};

/// Stabilization indices along which the stabilized densities converge:
/// geometric when the perturbation makes the sparseness condition automatic,
/// otherwise a forward scan for max(|p_n|, |q_n|) n^{alpha/2} <= tol n^{-alpha}.
std::vector<Index> pick_subsequence(const CoefficientFamily& family, Index count,
                                    const SubsequenceOptions& opt = {});

struct WronskianIdentityReport {
  Real constancy_max_rel = 0.0;   // W spread across sample indices
  Real deviation = 0.0;           // |W + 2i sqrt(-lambda) H^2| / (2 sqrt(-lambda) H^2)
  Real deviation_half_seed = 0.0; // same with n_seed/2
  Real deviation_extrapolated = 0.0;  // after removing the N^{-alpha} seed term
  bool trend_improving = false;
  Complex wronskian;
  Real target = 0.0;              // 2 sqrt(-lambda) H^2
};

WronskianIdentityReport wronskian_identity_check(const CoefficientFamily& family,
                                                 Real lambda, const Options& opt = {},
                                                 const TraceOptions& trace_opt = {});

struct DecompositionReport {
  Real max_normalized_error = 0.0;
  Index window_lo = 0, window_hi = 0;
};

/// Envelope-normalized max of |P_n - 2 Re(Psi u^+_n)| over the index window,
/// with u^+_n in its asymptotic product form (prod eta^-)conj * h-refined,
/// so the measured error follows the o(1) law of the asymptotics rather
/// than the seed error of a recurrence trace.  Psi = 0 puts the error at
/// the sanity floor ~= 1.
DecompositionReport decomposition_check(const CoefficientFamily& family, Real lambda,
                                        Index window_lo, Index window_hi,
                                        const Options& opt = {},
                                        bool zero_psi_floor = false);

/// Shared per-window context for grid sweeps (N0 computed once).
class Pipeline {
 public:
  Pipeline(CoefficientFamily family, Options opt = {});
  Index n0() const { return n0_; }
  const Options& options() const { return opt_; }
  CriticalDensity rho(Real lambda) const;

 private:
  CoefficientFamily family_;
  Options opt_;
  Index n0_;
};

}  // namespace jacobi::critical
