#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "jacobi/coefficients.hpp"
#include "jacobi/types.hpp"

namespace jacobi::levinson {

/// Per-(n, lambda) scalars of the diagonalizing chain for the critical
/// family.  All square roots share one branch: cut along the negative real
/// axis, values taken from above (sqrt of a negative number is +i sqrt|.|).
struct ChainQuantities {
  Index n = 2;
  Complex d;          // d_n = (lambda - b_n)/(2 a_n)
  Complex d_prev;     // d_{n-1}
  Complex c;          // c_n = 1 - 4 a_{n-1}^2 / ((lambda-b_{n-1})(lambda-b_n))
  Complex chi;        // chi_n, rational in lambda and n^alpha
  Complex sqrt_chi;   // branch-resolved square root of chi_n
  Complex g_plus, g_minus;    // +-sqrt_chi + alpha/(4n)
  Complex eta_minus;          // closed-form eta^-_n
  Complex h_plus, h_minus;    // d_{n-1} (1 + g^{+-}_n)
};

/// chi_n and the closed-form eta^-_n depend on the family only through
/// alpha; d, c, h pick up the actual (possibly perturbed) entries.
ChainQuantities chain_at(const CoefficientFamily& family, Index n, Complex lambda);

/// Direct-form square root of chi_n (principal branch of the assembled
/// rational value); chain_at stores the factored form.  The two must agree
/// on validated windows.
Complex sqrt_chi_direct(Real alpha, Index n, Complex lambda);

/// log |eta^-_n(lambda)|^2 for real lambda < 0 via the exact closed form
/// 1 - alpha/(2n) + alpha lambda/(4 n^{1+alpha}) + alpha^2/(16 n^2).
Real log_abs2_eta_minus(Real alpha, Real lambda, Index n);

/// eta^-_n(lambda) itself (depends on the family only through alpha).
Complex eta_minus_value(Real alpha, Complex lambda, Index n);

struct N0Options {
  Index start = 2;
  Index ceiling = Index(1) << 20;
  int n_samples = 48;       // logarithmic samples of [N0, 8 N0]
  int boundary_points = 64;
  int interior_points = 32;
};

/// Smallest admissible chain-start index from a doubling search: on a
/// deterministic sample of the window and of n in [N0, 8 N0],
/// |eta^-| >= 1/2, |g^{+-}| <= 1/2, Re sqrt(chi) >= -1e-12, |d_{n-1}| >= 1/4,
/// and the roots/pole of chi_n stay outside the window.
Index select_N0(const CoefficientFamily& family, const Window& window,
                const N0Options& opt = {});

/// Diagonal system of the asymptotic lemma: x_{n+1} = (diag(l_n, 1/l_n) + R_n) x_n.
struct DiagonalSystem {
  Index start = 1;
  std::vector<Complex> lam;   // l_k, k = start .. start+len-1
  std::vector<Mat2c> rem;     // R_k
  std::optional<Real> contraction_bound;  // known C with prod |l| >= 1/C

  Index count() const { return Index(lam.size()); }
  /// Sum |l_k| ||R_k||_inf over the stored range (reported, not assumed finite).
  Real weighted_sum() const;
};

struct VolterraSolution {
  Index start = 1;
  std::vector<Vec2c> values;       // x~_n for n = start .. n_max+1
  std::vector<Real> tail_bounds;   // exp(S_n) - 1 per stored n
  Index terms_used = 0;

  Index count() const { return Index(values.size()); }
  const Vec2c& at(Index n) const { return values[size_t(n - start)]; }
  Real tail_bound_at(Index n) const { return tail_bounds[size_t(n - start)]; }
  Real tail_bound() const { return tail_bounds.front(); }
};

/// Exact backward substitution on the truncated Volterra equation
///   x~_n = e_- - sum_{k=n}^{n_max} diag(prod_{l=n}^{k} l_l^{-2}, 1) l_k R_k x~_k,
/// remainders beyond n_max treated as zero.  Equivalent to summing the
/// Neumann series; the exp-tail bound is kept as an a-posteriori certificate.
VolterraSolution volterra_solve(const DiagonalSystem& system, Index n_max);

}  // namespace jacobi::levinson
