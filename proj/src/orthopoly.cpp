#include "jacobi/orthopoly.hpp"

#include <algorithm>
#include <string>

namespace jacobi {

namespace {

void require_covered(const PolySeq& s, Index n, const char* who) {
  if (n < 1 || n > s.count())
    throw Error(std::string(who) + ": index " + std::to_string(n) +
                " outside stored range");
}

}  // namespace

Complex PolySeq::P(Index n) const {
  require_covered(*this, n, "PolySeq::P");
  const Complex v = p[size_t(n - 1)];
  return scaled() ? v * std::exp(p_log[size_t(n - 1)]) : v;
}

Complex PolySeq::Q(Index n) const {
  require_covered(*this, n, "PolySeq::Q");
  const Complex v = q[size_t(n - 1)];
  return scaled() ? v * std::exp(q_log[size_t(n - 1)]) : v;
}

Real PolySeq::log_abs_P(Index n) const {
  require_covered(*this, n, "PolySeq::log_abs_P");
  const Real l = std::log(std::abs(p[size_t(n - 1)]));
  return scaled() ? l + p_log[size_t(n - 1)] : l;
}

Real PolySeq::log_abs_Q(Index n) const {
  require_covered(*this, n, "PolySeq::log_abs_Q");
  const Real l = std::log(std::abs(q[size_t(n - 1)]));
  return scaled() ? l + q_log[size_t(n - 1)] : l;
}

Complex PolySeq::wronskian_pq(const CoefficientFamily& family, Index n) const {
  require_covered(*this, n + 1, "PolySeq::wronskian_pq");
  const Real a_n = coeffs(family, n).a;
  const size_t i = size_t(n - 1);
  if (!scaled()) return a_n * (p[i] * q[i + 1] - p[i + 1] * q[i]);
  // Factor out the larger combined scale; the cross terms cancel to O(1).
  const Real t1 = p_log[i] + q_log[i + 1];
  const Real t2 = p_log[i + 1] + q_log[i];
  const Real m = std::max(t1, t2);
  return a_n * (p[i] * q[i + 1] * std::exp(t1 - m) -
                p[i + 1] * q[i] * std::exp(t2 - m)) *
         std::exp(m);
}

PolySeq orthopoly(const CoefficientFamily& family, Complex lambda, Index n_max,
                  RecurrenceMode mode, Real rescale_threshold) {
  if (n_max < 1) throw Error("orthopoly: n_max >= 1 required");
  const bool scaled = mode == RecurrenceMode::Scaled;
  const Index count = n_max + 1;

  PolySeq out;
  out.lambda = lambda;
  out.n_max = n_max;
  out.p.reserve(size_t(count));
  out.q.reserve(size_t(count));
  if (scaled) {
    out.p_log.reserve(size_t(count));
    out.q_log.reserve(size_t(count));
  }

  const CoefficientPair c1 = coeffs(family, 1);
  Complex p_prev = 1.0, p_cur = (lambda - c1.b) / c1.a;
  Complex q_prev = 0.0, q_cur = 1.0 / c1.a;
  Real p_scale = 0.0, q_scale = 0.0;

  auto push = [&](Complex pv, Complex qv) {
    out.p.push_back(pv);
    out.q.push_back(qv);
    if (scaled) {
      out.p_log.push_back(p_scale);
      out.q_log.push_back(q_scale);
    }
  };
  push(p_prev, q_prev);

  CoefficientPair cn = c1;
  for (Index n = 2; n <= n_max + 1; ++n) {
    push(p_cur, q_cur);
    if (n == n_max + 1) break;
    const CoefficientPair cnext = coeffs(family, n);
    const Real a_prev = cn.a;
    cn = cnext;
    // u_{n+1} = ((lambda - b_n) u_n - a_{n-1} u_{n-1}) / a_n
    Complex p_next = ((lambda - cn.b) * p_cur - a_prev * p_prev) / cn.a;
    Complex q_next = ((lambda - cn.b) * q_cur - a_prev * q_prev) / cn.a;
    p_prev = p_cur;
    p_cur = p_next;
    q_prev = q_cur;
    q_cur = q_next;
    if (scaled) {
      const Real pm = std::max(std::abs(p_prev), std::abs(p_cur));
      if (pm > rescale_threshold) {
        p_prev /= pm;
        p_cur /= pm;
        p_scale += std::log(pm);
      }
      const Real qm = std::max(std::abs(q_prev), std::abs(q_cur));
      if (qm > rescale_threshold) {
        q_prev /= qm;
        q_cur /= qm;
        q_scale += std::log(qm);
      }
    }
  }
  return out;
}

Mat2c transfer_matrix(const CoefficientFamily& family, Index n, Complex lambda) {
  if (n < 2) throw Error("transfer_matrix: n >= 2 required");
  const CoefficientPair prev = coeffs(family, n - 1);
  const CoefficientPair cur = coeffs(family, n);
  Mat2c B;
  B(0, 0) = 0.0;
  B(0, 1) = 1.0;
  B(1, 0) = -prev.a / cur.a;
  B(1, 1) = (lambda - cur.b) / cur.a;
  return B;
}

}  // namespace jacobi
