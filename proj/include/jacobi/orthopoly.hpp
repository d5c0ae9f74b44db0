#pragma once

#include <vector>

#include "jacobi/coefficients.hpp"
#include "jacobi/types.hpp"

namespace jacobi {

struct PolyPair {
  Complex p;  // first kind, P_n(lambda)
  Complex q;  // second kind, Q_n(lambda)
  Index n = 1;
};

enum class RecurrenceMode { Plain, Scaled };

/// First- and second-kind polynomial values for n = 1 .. n_max+1.
///
/// Initial values: P_1 = 1, P_2 = (lambda - b_1)/a_1, Q_1 = 0, Q_2 = 1/a_1,
/// then a_{n-1} u_{n-1} + b_n u_n + a_n u_{n+1} = lambda u_n.
///
/// In Scaled mode each stored value is a mantissa with a separate per-index
/// log scale, so runs deep into the exponential-growth region stay within
/// double range; Plain mode stores raw values.
struct PolySeq {
  Complex lambda;
  Index n_max = 1;
  std::vector<Complex> p, q;           // mantissas; index 0 corresponds to n = 1
  std::vector<Real> p_log, q_log;      // per-index log scales; empty in Plain mode

  bool scaled() const { return !p_log.empty(); }
  Index count() const { return Index(p.size()); }

  Complex P(Index n) const;  // assembled value (may overflow when scaled)
  Complex Q(Index n) const;
  Real log_abs_P(Index n) const;
  Real log_abs_Q(Index n) const;

  /// a_n (P_n Q_{n+1} - P_{n+1} Q_n), evaluated scale-aware.  Equals 1 for
  /// genuine (P, Q) pairs at every n.
  Complex wronskian_pq(const CoefficientFamily& family, Index n) const;
};

PolySeq orthopoly(const CoefficientFamily& family, Complex lambda, Index n_max,
                  RecurrenceMode mode = RecurrenceMode::Plain,
                  Real rescale_threshold = 1e100);

/// Transfer matrix B_n = (0, 1; -a_{n-1}/a_n, (lambda - b_n)/a_n), n >= 2,
/// advancing (u_{n-1}, u_n) to (u_n, u_{n+1}).
Mat2c transfer_matrix(const CoefficientFamily& family, Index n, Complex lambda);

/// Weighted Wronskian a_n (u_n v_{n+1} - u_{n+1} v_n).
inline Complex wronskian(Complex u_n, Complex u_np1, Complex v_n, Complex v_np1,
                         Real a_n) {
  return a_n * (u_n * v_np1 - u_np1 * v_n);
}

}  // namespace jacobi
