#pragma once

#include <vector>

#include "jacobi/coefficients.hpp"
#include "jacobi/types.hpp"

namespace jacobi {

enum class TraceMethod { BackwardRecurrence, ChainVolterra };

/// Generalized-eigenvector sequence stored as (log-magnitude, phase) pairs.
/// Phases are unwrapped along n; a zero value carries log_mag = -inf.
struct SolutionTrace {
  Complex lambda;
  Index n_lo = 1, n_hi = 0;  // inclusive index range
  std::vector<Real> log_mag;
  std::vector<Real> phase;
  Index seed_index = 0;
  TraceMethod method = TraceMethod::BackwardRecurrence;
  Index n0 = 0;

  Index count() const { return n_hi - n_lo + 1; }
  bool covers(Index n) const { return n >= n_lo && n <= n_hi; }

  Real log_abs(Index n) const;
  Real arg(Index n) const;
  Complex value(Index n) const;
  /// Value rescaled by exp(-log_offset); keeps neighbor ratios representable.
  Complex value_rel(Index n, Real log_offset) const;
};

/// Builds the trace of the solution fixed by (u_{seed-1}, u_seed) =
/// exp(seed_log + i seed_phase) * (v_prev, v_at), extending backward to
/// n = 1 and forward to n_max by the exact three-term recurrence.
SolutionTrace trace_from_seed(const CoefficientFamily& family, Complex lambda,
                              Index n_max, Index seed_index, Complex v_prev,
                              Complex v_at, Real seed_log, Real seed_phase);

/// Complex-conjugate trace (the u^+ companion for real lambda).
SolutionTrace conjugate_trace(const SolutionTrace& t);

/// Max relative residual of a_{n-1}u_{n-1} + b_n u_n + a_n u_{n+1} = lambda u_n
/// over interior indices of [lo, hi], scale-invariantly.
Real max_recurrence_residual(const SolutionTrace& t, const CoefficientFamily& family,
                             Index lo, Index hi);

/// Scale-aware Wronskian a_n (u_n v_{n+1} - u_{n+1} v_n) between two traces.
Complex trace_wronskian(const SolutionTrace& u, const SolutionTrace& v,
                        const CoefficientFamily& family, Index n);

/// Unwraps raw principal arguments in place (ascending order, nearest branch).
void unwrap_phases(std::vector<Real>& raw);

}  // namespace jacobi
