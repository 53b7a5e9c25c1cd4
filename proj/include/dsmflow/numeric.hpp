#pragma once

#include <cmath>
#include <limits>
#include <optional>

#include "dsmflow/error.hpp"

namespace dsmflow {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLnSqrt2Pi = 0.91893853320467274178;  // ln(sqrt(2 pi))

// h = cbrt(eps) * (1 + |x|), the step that balances truncation and roundoff
// for a central difference.
inline double central_step(double x) {
  return std::cbrt(std::numeric_limits<double>::epsilon()) * (1.0 + std::abs(x));
}

template <class F>
double central_difference(F&& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

template <class F>
double central_difference(F&& f, double x) {
  return central_difference(f, x, central_step(x));
}

// Root of an increasing function g on a bracket [lo, hi] with g(lo) < 0 < g(hi).
// Newton steps are taken when they stay inside the bracket, bisection otherwise.
template <class G, class DG>
double solve_increasing(G&& g, DG&& dg, double x0, double lo, double hi,
                        int max_iter = 200) {
  double x = (x0 > lo && x0 < hi) ? x0 : 0.5 * (lo + hi);
  for (int it = 0; it < max_iter; ++it) {
    const double gx = g(x);
    if (gx == 0.0) return x;
    if (gx < 0.0) lo = x; else hi = x;
    const double slope = dg(x);
    double next = x - gx / slope;
    if (!(slope > 0.0) || !(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(x))) {
      return next;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(x))) {
      return 0.5 * (lo + hi);
    }
    x = next;
  }
  return x;
}

}  // namespace dsmflow
