#pragma once

// Independent reference helpers for the test suites. Nothing here calls the
// library's own special functions.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <sstream>
#include <string>

namespace support {

/// Closed-form Student-t density, written from scratch with std::lgamma.
inline double t_pdf(double x, double loc, double scale, double nu) {
  const double t = (x - loc) / scale;
  return std::exp(std::lgamma(0.5 * (nu + 1)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * M_PI) -
                  std::log(scale) - 0.5 * (nu + 1) * std::log1p(t * t / nu));
}

inline double normal_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * M_PI));
}

/// Five-point central derivative; truncation O(h^4).
template <class F>
double derivative(F&& f, double x, double h) {
  return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}

/// Root of an increasing function on [lo, hi] by plain bisection.
template <class F>
double bisect(F&& f, double lo, double hi, int iters = 200) {
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Composite Simpson on [a, b] with n (even) intervals.
template <class F>
double simpson(F&& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace support

namespace support {

namespace detail {
template <class F>
double adaptive_step(F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                     int depth, long& budget) {
  const double m = 0.5 * (a + b);
  const double flm = f(0.5 * (a + m)), frm = f(0.5 * (m + b));
  budget -= 2;
  if (budget < 0) throw std::runtime_error("adaptive Simpson ran out of evaluations");
  const double left = (m - a) / 6 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6 * (fm + 4 * frm + fb);
  const double diff = left + right - whole;
  // stop at the tolerance or once the difference is down to rounding
  if (depth <= 0 || std::abs(diff) <= 15 * tol || std::abs(diff) <= 1e-15 * std::abs(left + right)) {
    return left + right + diff / 15;
  }
  return adaptive_step(f, a, m, fa, flm, fm, left, tol / 2, depth - 1, budget) +
         adaptive_step(f, m, b, fm, frm, fb, right, tol / 2, depth - 1, budget);
}
}  // namespace detail

/// Adaptive Simpson with Richardson correction over `panels` equal pieces
/// (so a peak between the first few samples is not missed); throws rather
/// than spin when the integrand is too noisy for the absolute tolerance.
template <class F>
double adaptive(F f, double a, double b, double tol, int panels = 64, int depth = 50,
                long budget = 20000000) {
  double total = 0.0;
  const double w = (b - a) / panels;
  for (int i = 0; i < panels; ++i) {
    const double lo = a + i * w, hi = i + 1 == panels ? b : a + (i + 1) * w;
    const double fa = f(lo), fb = f(hi), fm = f(0.5 * (lo + hi));
    total += detail::adaptive_step(f, lo, hi, fa, fm, fb, (hi - lo) / 6 * (fa + 4 * fm + fb),
                                   tol / panels, depth, budget);
  }
  return total;
}

}  // namespace support
