#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

#include <Eigen/Core>

namespace jacobi {

using Real = double;
using Complex = std::complex<double>;
using Index = std::int64_t;
using Mat2c = Eigen::Matrix2cd;
using Vec2c = Eigen::Vector2cd;

inline constexpr Real kPi = 3.14159265358979323846;

/// Square root with the branch cut along the negative real axis approached
/// from above: sqrt(-x) = i*sqrt(x) for x > 0.  Plain principal branch off
/// the real axis.
inline Complex sqrt_upper(Complex z) {
  if (z.imag() == 0.0) {
    if (z.real() >= 0.0) return {std::sqrt(z.real()), 0.0};
    return {0.0, std::sqrt(-z.real())};
  }
  return std::sqrt(z);
}

inline Complex cis(Real phi) { return {std::cos(phi), std::sin(phi)}; }

/// Wrap an angle difference into (-pi, pi].
inline Real wrap_phase(Real d) {
  d = std::fmod(d, 2.0 * kPi);
  if (d <= -kPi) d += 2.0 * kPi;
  if (d > kPi) d -= 2.0 * kPi;
  return d;
}

/// Axis-aligned spectral-parameter region.  A degenerate imaginary extent
/// (im_lo == im_hi == 0) means a real interval, taken on the upper side of
/// the cut along the negative half-axis.
struct Window {
  Real re_lo = -4.0;
  Real re_hi = -0.5;
  Real im_lo = 0.0;
  Real im_hi = 0.0;

  bool is_interval() const { return im_lo == 0.0 && im_hi == 0.0; }
  bool contains(Complex z) const {
    return z.real() >= re_lo && z.real() <= re_hi && z.imag() >= im_lo &&
           z.imag() <= im_hi;
  }
  bool contains(Real x) const { return contains(Complex(x, 0.0)); }
};

enum class DensityRoute { CriticalFormula, NonCriticalFormula, Stabilized, Resolvent };

inline const char* route_name(DensityRoute r) {
  switch (r) {
    case DensityRoute::CriticalFormula: return "critical-formula";
    case DensityRoute::NonCriticalFormula: return "noncritical-formula";
    case DensityRoute::Stabilized: return "stabilized";
    case DensityRoute::Resolvent: return "resolvent";
  }
  return "?";
}

struct DensityResult {
  Real lambda = 0.0;
  Real value = 0.0;
  Real uncertainty = 0.0;
  DensityRoute route = DensityRoute::Stabilized;
};

/// Neumaier-compensated accumulator for long sums of small terms.
struct CompensatedSum {
  Real s = 0.0;
  Real c = 0.0;
  void add(Real x) {
    Real t = s + x;
    if (std::abs(s) >= std::abs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  Real value() const { return s + c; }
};

}  // namespace jacobi
