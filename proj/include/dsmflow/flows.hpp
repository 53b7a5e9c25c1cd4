#pragma once

// Strictly increasing scalar maps y = T(x) and the diffusion they induce,
// m(x) = 1 / T'(x).
//
// A flow model provides forward, inverse, jacobian (T') and image(). It may
// also provide diffusion_matrix, diffusion_derivative (m') or
// jacobian_derivative (T''); the free functions below use whichever is
// available and fall back to central differences otherwise.

#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <variant>

#include "dsmflow/densities.hpp"
#include "dsmflow/error.hpp"
#include "dsmflow/numeric.hpp"

namespace dsmflow {

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains_open(double v) const { return v > lo && v < hi; }
  double width() const { return hi - lo; }
};

template <class F>
concept FlowModel = requires(const F& f, double x) {
  { f.forward(x) } -> std::convertible_to<double>;
  { f.inverse(x) } -> std::convertible_to<double>;
  { f.jacobian(x) } -> std::convertible_to<double>;
  { f.image() } -> std::convertible_to<Interval>;
};

/// m and dm/dx at one point.
struct DiffusionValue {
  double m;
  double dm;
};

// ---------------------------------------------------------------------------

struct IdentityFlow {
  double forward(double x) const { return x; }
  double inverse(double y) const { return y; }
  double jacobian(double) const { return 1.0; }
  double jacobian_derivative(double) const { return 0.0; }
  double diffusion_matrix(double) const { return 1.0; }
  double diffusion_derivative(double) const { return 0.0; }
  Interval image() const { return {}; }
};

/// T(x) = slope * x + offset with slope > 0.
class AffineFlow {
public:
  AffineFlow(double slope, double offset) : slope_(slope), offset_(offset) {
    if (!(slope > 0.0) || !std::isfinite(slope) || !std::isfinite(offset)) {
      throw InvalidParam("flows", "Affine flow requires finite slope > 0");
    }
  }

  double slope() const { return slope_; }
  double offset() const { return offset_; }

  double forward(double x) const { return slope_ * x + offset_; }
  double inverse(double y) const { return (y - offset_) / slope_; }
  double jacobian(double) const { return slope_; }
  double jacobian_derivative(double) const { return 0.0; }
  double diffusion_matrix(double) const { return 1.0 / slope_; }
  double diffusion_derivative(double) const { return 0.0; }
  Interval image() const { return {}; }

private:
  double slope_;
  double offset_;
};

// ---------------------------------------------------------------------------

/// Which constant multiplies the arctan map.
///
/// MatchDiffusion: T(x) = sqrt(b) atan((x - theta) / sqrt(b)), so that
///   m(x) = 1 + (x - theta)^2 / b exactly.
/// MatchAppendixD: T(x) = atan((x - theta) / sqrt(b)) / (b sqrt(b)), whose
///   image is (-pi / (2 b sqrt(b)), pi / (2 b sqrt(b))) and whose diffusion is
///   b^2 (1 + (x - theta)^2 / b).
enum class ArctanPrefactor { MatchDiffusion, MatchAppendixD };

class ArctanFlow {
public:
  ArctanFlow(double theta, double b, ArctanPrefactor mode = ArctanPrefactor::MatchDiffusion)
      : theta_(theta), b_(b), mode_(mode) {
    if (!(b > 0.0) || !std::isfinite(b) || !std::isfinite(theta)) {
      throw InvalidParam("flows", "Arctan flow requires finite theta and b > 0");
    }
    sqrt_b_ = std::sqrt(b);
    gain_ = mode == ArctanPrefactor::MatchDiffusion ? 1.0 : 1.0 / (b * b);
  }

  double theta() const { return theta_; }
  double b() const { return b_; }
  ArctanPrefactor mode() const { return mode_; }

  double forward(double x) const { return gain_ * sqrt_b_ * std::atan((x - theta_) / sqrt_b_); }

  double inverse(double y) const {
    const Interval img = image();
    if (!img.contains_open(y)) {
      std::ostringstream os;
      os.precision(17);
      os << "y = " << y << " outside the arctan image (" << img.lo << ", " << img.hi << ")";
      throw OutOfImage("flows", os.str());
    }
    return sqrt_b_ * std::tan(y / (gain_ * sqrt_b_)) + theta_;
  }

  double jacobian(double x) const {
    const double u = (x - theta_) / sqrt_b_;
    return gain_ / (1.0 + u * u);
  }
  double jacobian_derivative(double x) const {
    const double u = (x - theta_) / sqrt_b_;
    const double s = 1.0 + u * u;
    return -2.0 * gain_ * u / (sqrt_b_ * s * s);
  }
  double diffusion_matrix(double x) const {
    const double d = x - theta_;
    return (1.0 + d * d / b_) / gain_;
  }
  double diffusion_derivative(double x) const { return 2.0 * (x - theta_) / (b_ * gain_); }

  Interval image() const {
    const double half = gain_ * sqrt_b_ * 0.5 * kPi;
    return {-half, half};
  }

private:
  double theta_;
  double b_;
  ArctanPrefactor mode_;
  double sqrt_b_;
  double gain_;
};

// ---------------------------------------------------------------------------

/// T(x) = target^{-1}(source(x)): maps the source density onto the Gaussian
/// target through the two CDFs. Lower and upper tails are composed separately
/// so neither side loses precision.
template <DensityModel Source>
class GaussianFlow {
public:
  explicit GaussianFlow(Source source, Gaussian target = Gaussian(0.0, 1.0))
      : source_(std::move(source)), target_(target) {}

  const Source& source() const { return source_; }
  const Gaussian& target() const { return target_; }

  double forward(double x) const {
    const double lower = source_.cdf(x);
    if (lower < 0.5) {
      if (lower <= 0.0) return -std::numeric_limits<double>::infinity();
      return target_.quantile(lower);
    }
    const double upper = source_.sf(x);
    if (upper <= 0.0) return std::numeric_limits<double>::infinity();
    return target_.isf(upper);
  }

  double inverse(double y) const {
    const double lower = target_.cdf(y);
    if (lower < 0.5) {
      if (lower <= 0.0) throw OutOfImage("flows", "Gaussian flow inverse underflows in the lower tail");
      return source_.quantile(lower);
    }
    const double upper = target_.sf(y);
    if (upper <= 0.0) throw OutOfImage("flows", "Gaussian flow inverse underflows in the upper tail");
    return source_.isf(upper);
  }

  /// log T'(x) = log p_source(x) - log p_target(T(x)), never formed by differencing.
  double log_jacobian(double x) const { return log_jacobian_at(x, forward(x)); }

  double jacobian(double x) const { return std::exp(log_jacobian(x)); }

  double jacobian_derivative(double x) const {
    const double y = forward(x);
    const double jac = std::exp(log_jacobian_at(x, y));
    return jac * (source_.score(x) - target_.score(y) * jac);
  }

  double diffusion_matrix(double x) const { return std::exp(-log_jacobian(x)); }

  // m' = -m s_source(x) + s_target(T(x))
  double diffusion_derivative(double x) const { return diffusion(x).dm; }

  DiffusionValue diffusion(double x) const {
    const double y = forward(x);
    const double m = std::exp(-log_jacobian_at(x, y));
    return {m, -m * source_.score(x) + target_.score(y)};
  }

  Interval image() const { return {}; }

private:
  double log_jacobian_at(double x, double y) const {
    return source_.log_pdf(x) - target_.log_pdf(y);
  }

  Source source_;
  Gaussian target_;
};

// ---------------------------------------------------------------------------

/// Drift g of the ODE dx/dt = g(x) with its derivative. g_second is optional;
/// when empty it is obtained by differencing g_prime.
struct OdeDrift {
  std::string name;
  std::function<double(double)> g;
  std::function<double(double)> g_prime;
  std::function<double(double)> g_second;
  double lipschitz_hint = 1.0;

  double second(double x) const {
    if (g_second) return g_second(x);
    return central_difference(g_prime, x);
  }
};

/// One forward Euler step T(x) = x + delta g(x).
class EulerStepFlow {
public:
  EulerStepFlow(OdeDrift drift, double delta) : drift_(std::move(drift)), delta_(delta) {
    if (!drift_.g || !drift_.g_prime) throw InvalidParam("flows", "Euler step needs g and g'");
    if (!std::isfinite(delta)) throw InvalidParam("flows", "Euler step size must be finite");
  }

  const OdeDrift& drift() const { return drift_; }
  double delta() const { return delta_; }

  double forward(double x) const {
    (void)jacobian(x);
    return x + delta_ * drift_.g(x);
  }

  double jacobian(double x) const {
    const double slope = delta_ * drift_.g_prime(x);
    if (!(slope > -1.0)) {
      std::ostringstream os;
      os.precision(17);
      os << "delta * g'(x) = " << slope << " <= -1 at x = " << x;
      throw NonInvertible("flows", os.str());
    }
    return 1.0 + slope;
  }

  double jacobian_derivative(double x) const { return delta_ * drift_.second(x); }
  double diffusion_matrix(double x) const { return 1.0 / jacobian(x); }
  double diffusion_derivative(double x) const {
    const double j = jacobian(x);
    return -jacobian_derivative(x) / (j * j);
  }

  double inverse(double y) const {
    auto residual = [&](double x) { return x + delta_ * drift_.g(x) - y; };
    auto slope = [&](double x) { return jacobian(x); };
    const double x0 = y - delta_ * drift_.g(y);
    double half = std::max(2.0 * std::abs(x0 - y), 1e-12 * (1.0 + std::abs(y)));
    double lo = x0 - half;
    double hi = x0 + half;
    for (int i = 0; i < 200 && !(residual(lo) < 0.0 && residual(hi) > 0.0); ++i) {
      half *= 2.0;
      lo = x0 - half;
      hi = x0 + half;
    }
    if (residual(lo) >= 0.0) return lo;
    if (residual(hi) <= 0.0) return hi;
    return solve_increasing(residual, slope, x0, lo, hi);
  }

  Interval image() const { return {}; }

private:
  OdeDrift drift_;
  double delta_;
};

// ---------------------------------------------------------------------------
// Free-function surface.

template <FlowModel F>
double forward(const F& f, double x) {
  return f.forward(x);
}

template <FlowModel F>
double inverse(const F& f, double y) {
  return f.inverse(y);
}

template <FlowModel F>
double jacobian(const F& f, double x) {
  return f.jacobian(x);
}

/// m(x) = 1 / T'(x).
template <FlowModel F>
double diffusion_matrix(const F& f, double x) {
  if constexpr (requires { { f.diffusion_matrix(x) } -> std::convertible_to<double>; }) {
    return f.diffusion_matrix(x);
  } else {
    return 1.0 / f.jacobian(x);
  }
}

/// dm/dx by central differences of m, h = cbrt(eps) (1 + |x|).
template <FlowModel F>
double diffusion_matrix_derivative_fd(const F& f, double x) {
  return central_difference([&](double v) { return diffusion_matrix(f, v); }, x);
}

/// dm/dx, analytic where the flow provides it.
template <FlowModel F>
double diffusion_matrix_derivative(const F& f, double x) {
  if constexpr (requires { { f.diffusion_derivative(x) } -> std::convertible_to<double>; }) {
    return f.diffusion_derivative(x);
  } else if constexpr (requires { { f.jacobian_derivative(x) } -> std::convertible_to<double>; }) {
    const double j = f.jacobian(x);
    return -f.jacobian_derivative(x) / (j * j);
  } else {
    return diffusion_matrix_derivative_fd(f, x);
  }
}

template <FlowModel F>
DiffusionValue diffusion(const F& f, double x) {
  if constexpr (requires { { f.diffusion(x) } -> std::convertible_to<DiffusionValue>; }) {
    return f.diffusion(x);
  } else {
    return {diffusion_matrix(f, x), diffusion_matrix_derivative(f, x)};
  }
}

// ---------------------------------------------------------------------------

/// Runtime choice of flow, built from configs.
class AnyFlow {
public:
  using Storage =
      std::variant<IdentityFlow, AffineFlow, ArctanFlow, GaussianFlow<StudentT>, EulerStepFlow>;

  template <class F>
    requires std::constructible_from<Storage, F>
  AnyFlow(F f) : storage_(std::move(f)) {}

  const Storage& storage() const { return storage_; }

  double forward(double x) const { return visit([x](const auto& f) { return f.forward(x); }); }
  double inverse(double y) const { return visit([y](const auto& f) { return f.inverse(y); }); }
  double jacobian(double x) const { return visit([x](const auto& f) { return f.jacobian(x); }); }
  double diffusion_matrix(double x) const {
    return visit([x](const auto& f) { return dsmflow::diffusion_matrix(f, x); });
  }
  double diffusion_derivative(double x) const {
    return visit([x](const auto& f) { return dsmflow::diffusion_matrix_derivative(f, x); });
  }
  Interval image() const {
    return std::visit([](const auto& f) { return f.image(); }, storage_);
  }

private:
  template <class Fn>
  double visit(Fn&& fn) const {
    return std::visit(std::forward<Fn>(fn), storage_);
  }

  Storage storage_;
};

}  // namespace dsmflow
