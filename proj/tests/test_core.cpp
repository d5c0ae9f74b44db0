#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "jacobi/coefficients.hpp"
#include "jacobi/orthopoly.hpp"

using namespace jacobi;

namespace {

const CoefficientFamily kFree = CoefficientFamily::free_matrix();
const CoefficientFamily kCritical = CoefficientFamily::critical(0.5);
const CoefficientFamily kSqrt = CoefficientFamily::noncritical(0.5, 0.0);

}  // namespace

TEST_CASE("coefficient families reproduce their rules exactly") {
  CHECK(coeffs(kCritical, 4).a == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(coeffs(kCritical, 4).b == doctest::Approx(-4.0).epsilon(1e-15));
  CHECK(coeffs(kCritical, 1).a == doctest::Approx(1.0));
  CHECK(coeffs(kCritical, 1).b == doctest::Approx(-2.0));
  CHECK(coeffs(kSqrt, 9).a == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(coeffs(kSqrt, 9).b == 0.0);
  CHECK(coeffs(kFree, 123).a == 1.0);
  CHECK(coeffs(kFree, 123).b == 0.0);

  const auto perturbed =
      CoefficientFamily::critical(0.5, Perturbation::power(1.0, 1.2, 1.0, 1.2));
  CHECK(coeffs(perturbed, 8).a ==
        doctest::Approx(std::sqrt(8.0) + std::pow(8.0, -1.2)).epsilon(1e-15));
  CHECK(coeffs(perturbed, 8).b ==
        doctest::Approx(-2.0 * std::sqrt(8.0) + std::pow(8.0, -1.2)).epsilon(1e-15));
}

TEST_CASE("nonpositive off-diagonal entries are rejected") {
  const auto bad =
      CoefficientFamily::critical(0.5, Perturbation::table({-2.0}, {}));
  CHECK_THROWS_AS(coeffs(bad, 1), NonPositiveEntry);
  CHECK_NOTHROW(coeffs(bad, 2));
  CHECK_THROWS_AS(check_positive_entries(bad, 4), NonPositiveEntry);
}

TEST_CASE("carleman partial sums") {
  const auto rep = carleman_divergence_check(kSqrt, 4);
  CHECK(rep.partial_sum ==
        doctest::Approx(1.0 + 1.0 / std::sqrt(2.0) + 1.0 / std::sqrt(3.0) + 0.5)
            .epsilon(1e-12));

  CHECK(carleman_divergence_check(kFree, 10).partial_sum == doctest::Approx(10.0));
  CHECK(carleman_divergence_check(kFree, 4096).growth_maintained);

  const auto quadratic =
      CoefficientFamily::explicit_entries({}, {}, PowerTail{1.0, 2.0});
  const auto qrep = carleman_divergence_check(quadratic, 100000);
  CHECK(qrep.partial_sum < 2.0);
  CHECK_FALSE(qrep.growth_maintained);

  const auto harmonic =
      CoefficientFamily::explicit_entries({}, {}, PowerTail{1.0, 1.0});
  CHECK(carleman_divergence_check(harmonic, 100000).growth_maintained);
}

TEST_CASE("orthopoly initial values and low-order polynomials") {
  const Complex lam(0.7, 0.3);
  const PolySeq free = orthopoly(kFree, lam, 3);
  CHECK(free.P(1) == Complex(1.0));
  CHECK(std::abs(free.P(2) - lam) < 1e-15);
  CHECK(std::abs(free.P(3) - (lam * lam - 1.0)) < 1e-15);
  CHECK(free.Q(1) == Complex(0.0));
  CHECK(free.Q(2) == Complex(1.0));

  const PolySeq crit = orthopoly(kCritical, lam, 2);
  CHECK(std::abs(crit.P(2) - (lam + 2.0)) < 1e-15);  // (lambda - b_1)/a_1
  CHECK(std::abs(crit.Q(2) - 1.0) < 1e-15);
}

TEST_CASE("W{P,Q} = 1 at every index") {
  std::mt19937 rng(20240817);
  std::uniform_real_distribution<Real> re(-3.0, 3.0), im(0.0, 1.0);
  // Complex lambda: the identity holds up to rounding relative to the size
  // of the two products being cancelled.
  for (const auto& family : {kFree, kCritical, kSqrt}) {
    for (int rep = 0; rep < 4; ++rep) {
      const Complex lam(re(rng), im(rng));
      const PolySeq ps = orthopoly(family, lam, 24);
      for (Index n : {Index(1), Index(7), Index(23)}) {
        const Real scale = 1.0 + coeffs(family, n).a *
                                     (std::abs(ps.P(n) * ps.Q(n + 1)) +
                                      std::abs(ps.P(n + 1) * ps.Q(n)));
        CHECK(std::abs(ps.wronskian_pq(family, n) - 1.0) < 1e-12 * scale);
      }
    }
  }
  // Real lambda in the a.c. region: bounded envelopes, deep range.
  const PolySeq ps = orthopoly(kCritical, -1.7, 20000);
  for (Index n : {Index(1), Index(100), Index(5000), Index(19999)})
    CHECK(std::abs(ps.wronskian_pq(kCritical, n) - 1.0) < 1e-11);
}

TEST_CASE("scaled recurrence survives the exponential-growth region") {
  // lambda = 3 is outside the free band: P_n ~ ((3+sqrt5)/2)^n overflows
  // a plain double run around n = 740.
  const PolySeq ps = orthopoly(kFree, 3.0, 100000, RecurrenceMode::Scaled);
  CHECK(std::isfinite(std::abs(ps.p.back())));
  CHECK(ps.log_abs_P(100000) ==
        doctest::Approx(100000 * std::log((3.0 + std::sqrt(5.0)) / 2.0)).epsilon(1e-3));
  // Against the plain run while both representations are in range.
  const PolySeq plain = orthopoly(kFree, 3.0, 500);
  for (Index n : {Index(3), Index(100), Index(500)})
    CHECK(std::abs(ps.P(n) - plain.P(n)) <= 1e-12 * std::abs(plain.P(n)));
}

TEST_CASE("Wronskian constancy to 1e5 in scaled mode (a.c. region)") {
  const Real lam = -1.0;
  const PolySeq ps = orthopoly(kCritical, lam, 100000, RecurrenceMode::Scaled);
  const Complex w0 = ps.wronskian_pq(kCritical, 2);
  for (Index n = 2; n <= 100000; n = n * 3 + 1) {
    const Complex w = ps.wronskian_pq(kCritical, n);
    CHECK(std::abs(w - w0) <= 1e-10 * std::abs(w0));
  }
}

TEST_CASE("recurrence residual stays at rounding level") {
  const Real lam = -1.3;
  const PolySeq ps = orthopoly(kCritical, lam, 5000);
  for (Index n = 2; n <= 4999; n += 97) {
    const CoefficientPair cm = coeffs(kCritical, n - 1);
    const CoefficientPair cn = coeffs(kCritical, n);
    const Complex r = cm.a * ps.P(n - 1) + (cn.b - lam) * ps.P(n) + cn.a * ps.P(n + 1);
    const Real denom = std::abs(cm.a * ps.P(n - 1)) + std::abs(cn.a * ps.P(n + 1)) +
                       std::abs((cn.b - lam) * ps.P(n));
    CHECK(std::abs(r) <= 1e-12 * denom);
  }
}

TEST_CASE("transfer matrix rows, determinant, and limits") {
  const Real lam = -1.0;
  SUBCASE("determinant telescopes to a_{n-1}/a_n") {
    for (Index n : {Index(2), Index(5), Index(40)}) {
      const Mat2c B = transfer_matrix(kSqrt, n, lam);
      const Real det = (B(0, 0) * B(1, 1) - B(0, 1) * B(1, 0)).real();
      CHECK(det == doctest::Approx(coeffs(kSqrt, n - 1).a / coeffs(kSqrt, n).a)
                       .epsilon(1e-14));
    }
  }
  SUBCASE("critical limit (0,1;-1,2)") {
    const Mat2c B = transfer_matrix(kCritical, 1000000, lam);
    CHECK(std::abs(B(1, 0) - Complex(-1.0)) < 1e-3);
    CHECK(std::abs(B(1, 1) - Complex(2.0)) < 2e-3);
  }
  SUBCASE("noncritical d=0 limit (0,1;-1,0)") {
    const Mat2c B = transfer_matrix(kSqrt, 1000000, lam);
    CHECK(std::abs(B(1, 0) - Complex(-1.0)) < 1e-5);
    CHECK(std::abs(B(1, 1)) < 1e-2);
  }
  SUBCASE("applying B_n advances the polynomial pair") {
    const PolySeq ps = orthopoly(kCritical, lam, 64);
    for (Index n : {Index(2), Index(17), Index(63)}) {
      const Mat2c B = transfer_matrix(kCritical, n, lam);
      const Vec2c out = B * Vec2c(ps.P(n - 1), ps.P(n));
      const Real denom = std::abs(ps.P(n)) + std::abs(ps.P(n + 1));
      CHECK(std::abs(out(0) - ps.P(n)) + std::abs(out(1) - ps.P(n + 1)) <=
            1e-12 * denom);
    }
  }
  SUBCASE("determinant product telescopes over a long stretch") {
    Complex prod = 1.0;
    const Index lo = 5, hi = 10000;
    for (Index n = lo; n <= hi; ++n) {
      const Mat2c B = transfer_matrix(kCritical, n, lam);
      prod *= B(0, 0) * B(1, 1) - B(0, 1) * B(1, 0);
    }
    const Real expected = coeffs(kCritical, lo - 1).a / coeffs(kCritical, hi).a;
    CHECK(std::abs(prod - expected) <= 1e-12 * expected);
  }
}

TEST_CASE("weighted wronskian basics") {
  CHECK(wronskian(Complex(1.2, 0.5), Complex(-0.3, 2.0), Complex(1.2, 0.5),
                  Complex(-0.3, 2.0), 1.7) == Complex(0.0));

  // a_1 (P_1 Q_2 - P_2 Q_1) = 1 for any family.
  for (const auto& family : {kFree, kCritical, kSqrt}) {
    const PolySeq ps = orthopoly(family, Complex(0.4, 0.1), 2);
    CHECK(std::abs(wronskian(ps.P(1), ps.P(2), ps.Q(1), ps.Q(2),
                             coeffs(family, 1).a) -
                   1.0) < 1e-15);
  }

  // Constancy along genuine solutions: W at n and n+5 agree.
  const Complex lam(-2.0, 0.0);
  const PolySeq ps = orthopoly(kCritical, lam, 200);
  for (Index n : {Index(3), Index(50), Index(100)}) {
    const Complex w1 = wronskian(ps.P(n), ps.P(n + 1), ps.Q(n), ps.Q(n + 1),
                                 coeffs(kCritical, n).a);
    const Complex w2 = wronskian(ps.P(n + 5), ps.P(n + 6), ps.Q(n + 5), ps.Q(n + 6),
                                 coeffs(kCritical, n + 5).a);
    CHECK(std::abs(w1 - w2) <= 1e-12 * std::abs(w1));
  }
}
