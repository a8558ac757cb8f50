// Small numeric helpers shared across the library: cancellation-safe
// exponential differences, scalar root finding and 1-d minimization.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>

namespace klmc {

// 1 - e^{-x}, accurate for all x >= 0.
inline double one_minus_exp(double x) { return -std::expm1(-x); }

// 1 - e^{-2x}, accurate for all x >= 0.
inline double one_minus_exp2(double x) { return -std::expm1(-2.0 * x); }

// zeta + e^{-zeta} - 1 = zeta^2/2 - zeta^3/6 + ...  The two-term form loses
// relative accuracy ~2eps/zeta, so switch to the series for tiny zeta.
inline double zeta_plus_delta_minus_one(double zeta) {
  if (zeta < 1e-3) {
    double sum = 0.0;
    double term = zeta * zeta / 2.0;  // n = 2
    for (int n = 2; n < 40; ++n) {
      sum += term;
      term *= -zeta / static_cast<double>(n + 1);
      if (std::abs(term) < std::numeric_limits<double>::epsilon() * std::abs(sum)) break;
    }
    return sum;
  }
  return zeta + std::expm1(-zeta);
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// Bisection to |b - a| <= tol_abs; f(a) and f(b) must bracket a sign change.
double bisect_root(const std::function<double(double)>& f, double a, double b,
                   double tol_abs);

// Golden-section minimization of a unimodal-enough f on [a, b] down to a
// relative interval width. Returns the argmin.
double golden_section_min(const std::function<double(double)>& f, double a,
                          double b, double rel_tol);

// Least-squares slope of y against x.
double fit_slope(std::span<const double> x, std::span<const double> y);

}  // namespace klmc
