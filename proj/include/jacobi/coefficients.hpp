#pragma once

#include <vector>

#include "jacobi/errors.hpp"
#include "jacobi/types.hpp"

namespace jacobi {

enum class FamilyKind { Critical, NonCritical, Explicit };

enum class PerturbationKind { Zero, PowerDecay, Table };

/// Perturbation rule (p_n, q_n) for the critical family.  Power decay is
/// p_n = p_coeff * n^{-p_exponent}; tables are finitely supported, indexed
/// from n = 1, zero beyond their length.
struct Perturbation {
  PerturbationKind kind = PerturbationKind::Zero;
  Real p_coeff = 0.0, p_exponent = 0.0;
  Real q_coeff = 0.0, q_exponent = 0.0;
  std::vector<Real> p_table, q_table;

  Real p(Index n) const;
  Real q(Index n) const;

  static Perturbation zero() { return {}; }
  static Perturbation power(Real pc, Real pe, Real qc, Real qe);
  static Perturbation table(std::vector<Real> pt, std::vector<Real> qt);
};

/// Power-law tail c * n^e used past the explicit tables.
struct PowerTail {
  Real coeff = 1.0;
  Real exponent = 0.0;
  Real operator()(Index n) const {
    return exponent == 0.0 ? coeff : coeff * std::pow(Real(n), exponent);
  }
};

struct CoefficientPair {
  Real a = 1.0;  // off-diagonal, positive
  Real b = 0.0;  // diagonal
  Index n = 1;
};

/// Generator of Jacobi-matrix entries (a_n, b_n).
///
/// Critical:    a_n = n^alpha + p_n,  b_n = -2 n^alpha + q_n, alpha in (0,1).
/// NonCritical: a_n = n^beta,         b_n = 2 d a_n,          |d| < 1.
/// Explicit:    finite tables with a power-law tail rule.
struct CoefficientFamily {
  FamilyKind kind = FamilyKind::Explicit;

  // Critical
  Real alpha = 0.5;
  Perturbation perturbation;

  // NonCritical
  Real beta = 0.5;
  Real d = 0.0;

  // Explicit
  std::vector<Real> a_table, b_table;
  PowerTail a_tail{1.0, 0.0};
  PowerTail b_tail{0.0, 0.0};

  static CoefficientFamily critical(Real alpha, Perturbation pert = {});
  static CoefficientFamily noncritical(Real beta, Real d);
  static CoefficientFamily explicit_entries(std::vector<Real> a_table,
                                            std::vector<Real> b_table,
                                            PowerTail a_tail = {1.0, 0.0},
                                            PowerTail b_tail = {0.0, 0.0});
  /// The constant free matrix a == 1, b == 0.
  static CoefficientFamily free_matrix();
};

/// Exact (a_n, b_n) of the rule; throws NonPositiveEntry if a_n <= 0.
CoefficientPair coeffs(const CoefficientFamily& family, Index n);

/// Entries of the stabilized matrix: rows frozen at (a_N, b_N) past N.
inline CoefficientPair coeffs_frozen(const CoefficientFamily& family, Index freeze,
                                     Index n) {
  CoefficientPair cp = coeffs(family, n < freeze ? n : freeze);
  cp.n = n;
  return cp;
}

/// Checks a_n > 0 for n = 1..horizon (throws on the first violation).
void check_positive_entries(const CoefficientFamily& family, Index horizon);

struct CarlemanReport {
  Index horizon = 0;
  Real partial_sum = 0.0;       // sum_{n<=horizon} 1/a_n
  Real last_block = 0.0;        // sum over (horizon/2, horizon]
  Real prev_block = 0.0;        // sum over (horizon/4, horizon/2]
  bool growth_maintained = true;  // dyadic blocks not shrinking geometrically
};

/// Partial-sum evidence for the divergence condition sum 1/a_n = inf.
/// Reports evidence only; never claims divergence.
CarlemanReport carleman_divergence_check(const CoefficientFamily& family,
                                         Index horizon);

}  // namespace jacobi
