#pragma once

// Special functions backing the Student-t and Gaussian densities.
//
// The regularized incomplete beta function uses the continued fraction of
// I_x(a, b) evaluated with the modified Lentz algorithm; both x and y = 1 - x
// are passed explicitly so callers can supply the complement without the
// cancellation of forming 1 - x in floating point.

#include <array>
#include <cmath>
#include <limits>

#include "dsmflow/error.hpp"
#include "dsmflow/numeric.hpp"

namespace dsmflow::special {

inline double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

namespace detail {

// Continued fraction for I_x(a, b) / (x^a y^b / (a B(a, b))); converges
// quickly for x < (a + 1) / (a + b + 2).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  constexpr int kMaxIter = 10000;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

inline double ibeta_front(double a, double b, double x, double y) {
  return std::exp(a * std::log(x) + b * std::log(y) - log_beta(a, b));
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b) with y = 1 - x supplied by the caller.
inline double ibeta(double a, double b, double x, double y) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw InvalidParam("special", "ibeta requires a > 0 and b > 0");
  }
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return detail::ibeta_front(a, b, x, y) * detail::beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - detail::ibeta_front(a, b, x, y) * detail::beta_continued_fraction(b, a, y) / b;
}

/// Complement 1 - I_x(a, b), accurate when I_x(a, b) is close to one.
inline double ibetac(double a, double b, double x, double y) {
  return ibeta(b, a, y, x);
}

// ---------------------------------------------------------------------------
// Standard normal

inline double normal_log_pdf(double z) { return -0.5 * z * z - kLnSqrt2Pi; }

inline double normal_pdf(double z) { return std::exp(normal_log_pdf(z)); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Upper tail 1 - Phi(z) without cancellation.
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

namespace detail {

// Rational approximation (relative error ~1e-9) used as the starting point
// for Halley refinement; only called with 0 < p <= 0.5.
inline double normal_quantile_guess(double p) {
  static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02,
                                           -2.759285104469687e+02, 1.383577518672690e+02,
                                           -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02,
                                           -1.556989798598866e+02, 6.680131188771972e+01,
                                           -1.328068155288572e+01};
  static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01,
                                           -2.400758277161838e+00, -2.549732539343734e+00,
                                           4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01,
                                           2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double kLow = 0.02425;

  if (p < kLow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

inline double normal_quantile_lower(double p) {
  double x = normal_quantile_guess(p);
  for (int i = 0; i < 2; ++i) {
    const double e = normal_cdf(x) - p;
    const double u = e * std::exp(0.5 * x * x + kLnSqrt2Pi);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

}  // namespace detail

/// Phi^{-1}(p) for p in (0, 1).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("densities", "normal quantile requires 0 < u < 1");
  }
  if (p <= 0.5) return detail::normal_quantile_lower(p);
  return -detail::normal_quantile_lower(1.0 - p);
}

/// z with 1 - Phi(z) = q; keeps full relative accuracy for tiny q.
inline double normal_isf(double q) {
  if (!(q > 0.0 && q < 1.0)) {
    throw DomainError("densities", "normal inverse survival requires 0 < u < 1");
  }
  return -normal_quantile(q);
}

// ---------------------------------------------------------------------------
// Standardized Student-t with nu degrees of freedom

inline double student_t_log_norm(double nu) {
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * kPi);
}

/// P(T <= -|t|): the lower tail mass beyond |t|.
inline double student_t_tail(double t, double nu) {
  const double t2 = t * t;
  if (!std::isfinite(t2)) return 0.0;
  // x = nu / (nu + t^2), y = t^2 / (nu + t^2)
  const double x = nu / (nu + t2);
  const double y = t2 / (nu + t2);
  return 0.5 * ibeta(0.5 * nu, 0.5, x, y);
}

inline double student_t_cdf(double t, double nu) {
  const double tail = student_t_tail(t, nu);
  return t < 0.0 ? tail : 1.0 - tail;
}

}  // namespace dsmflow::special
