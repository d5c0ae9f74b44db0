#include "jacobi/coefficients.hpp"

#include <string>
#include <utility>

namespace jacobi {

Real Perturbation::p(Index n) const {
  switch (kind) {
    case PerturbationKind::Zero: return 0.0;
    case PerturbationKind::PowerDecay:
      return p_coeff == 0.0 ? 0.0 : p_coeff * std::pow(Real(n), -p_exponent);
    case PerturbationKind::Table:
      return n >= 1 && n <= Index(p_table.size()) ? p_table[size_t(n - 1)] : 0.0;
  }
  return 0.0;
}

Real Perturbation::q(Index n) const {
  switch (kind) {
    case PerturbationKind::Zero: return 0.0;
    case PerturbationKind::PowerDecay:
      return q_coeff == 0.0 ? 0.0 : q_coeff * std::pow(Real(n), -q_exponent);
    case PerturbationKind::Table:
      return n >= 1 && n <= Index(q_table.size()) ? q_table[size_t(n - 1)] : 0.0;
  }
  return 0.0;
}

Perturbation Perturbation::power(Real pc, Real pe, Real qc, Real qe) {
  Perturbation out;
  out.kind = PerturbationKind::PowerDecay;
  out.p_coeff = pc;
  out.p_exponent = pe;
  out.q_coeff = qc;
  out.q_exponent = qe;
  return out;
}

Perturbation Perturbation::table(std::vector<Real> pt, std::vector<Real> qt) {
  Perturbation out;
  out.kind = PerturbationKind::Table;
  out.p_table = std::move(pt);
  out.q_table = std::move(qt);
  return out;
}

CoefficientFamily CoefficientFamily::critical(Real alpha, Perturbation pert) {
  CoefficientFamily f;
  f.kind = FamilyKind::Critical;
  f.alpha = alpha;
  f.perturbation = std::move(pert);
  return f;
}

CoefficientFamily CoefficientFamily::noncritical(Real beta, Real d) {
  CoefficientFamily f;
  f.kind = FamilyKind::NonCritical;
  f.beta = beta;
  f.d = d;
  return f;
}

CoefficientFamily CoefficientFamily::explicit_entries(std::vector<Real> a_table,
                                                      std::vector<Real> b_table,
                                                      PowerTail a_tail,
                                                      PowerTail b_tail) {
  CoefficientFamily f;
  f.kind = FamilyKind::Explicit;
  f.a_table = std::move(a_table);
  f.b_table = std::move(b_table);
  f.a_tail = a_tail;
  f.b_tail = b_tail;
  return f;
}

CoefficientFamily CoefficientFamily::free_matrix() {
  return explicit_entries({}, {});
}

CoefficientPair coeffs(const CoefficientFamily& family, Index n) {
  if (n < 1) throw Error("coeffs: index must satisfy n >= 1");
  Real a = 0.0, b = 0.0;
  switch (family.kind) {
    case FamilyKind::Critical: {
      const Real na = std::pow(Real(n), family.alpha);
      a = na + family.perturbation.p(n);
      b = -2.0 * na + family.perturbation.q(n);
      break;
    }
    case FamilyKind::NonCritical: {
      a = std::pow(Real(n), family.beta);
      b = 2.0 * family.d * a;
      break;
    }
    case FamilyKind::Explicit: {
      a = n <= Index(family.a_table.size()) ? family.a_table[size_t(n - 1)]
                                            : family.a_tail(n);
      b = n <= Index(family.b_table.size()) ? family.b_table[size_t(n - 1)]
                                            : family.b_tail(n);
      break;
    }
  }
  if (!(a > 0.0))
    throw NonPositiveEntry("a_" + std::to_string(n) + " = " + std::to_string(a));
  return {a, b, n};
}

void check_positive_entries(const CoefficientFamily& family, Index horizon) {
  for (Index n = 1; n <= horizon; ++n) (void)coeffs(family, n);
}

CarlemanReport carleman_divergence_check(const CoefficientFamily& family,
                                         Index horizon) {
  if (horizon < 1) throw Error("carleman_divergence_check: horizon >= 1 required");
  CarlemanReport rep;
  rep.horizon = horizon;
  CompensatedSum total, block_last, block_prev;
  const Index q2 = horizon / 2, q4 = horizon / 4;
  for (Index n = 1; n <= horizon; ++n) {
    const Real t = 1.0 / coeffs(family, n).a;
    total.add(t);
    if (n > q2)
      block_last.add(t);
    else if (n > q4)
      block_prev.add(t);
  }
  rep.partial_sum = total.value();
  rep.last_block = block_last.value();
  rep.prev_block = block_prev.value();
  // Divergent 1/a_n keeps dyadic block sums from decaying geometrically;
  // e.g. 1/n gives ratio ~1, while 1/n^2 halves per block.
  rep.growth_maintained =
      horizon < 4 ? rep.partial_sum > 0.0 : rep.last_block >= 0.75 * rep.prev_block;
  return rep;
}

}  // namespace jacobi
