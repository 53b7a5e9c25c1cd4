#pragma once

// Rate of change of the Fisher divergence when both densities are carried by
// the ODE dx/dt = g(x):
//
//   dF/dt = -1/2 E_q[Delta^T (grad g + grad g^T) Delta]
//
// which in one dimension is -E_q[Delta^2 g'(x)]. The rate is checked against
// one forward Euler step T(x) = x + delta g(x) pushed through the densities.

#include <algorithm>
#include <cmath>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsmflow/densities.hpp"
#include "dsmflow/divergences.hpp"
#include "dsmflow/error.hpp"
#include "dsmflow/expectation.hpp"
#include "dsmflow/flows.hpp"
#include "dsmflow/pushforward.hpp"

namespace dsmflow {

namespace drifts {

/// g(x) = a x
inline OdeDrift linear(double a) {
  return {"linear", [a](double x) { return a * x; }, [a](double) { return a; },
          [](double) { return 0.0; }, std::max(std::abs(a), 1e-12)};
}

inline OdeDrift tanh() {
  return {"tanh", [](double x) { return std::tanh(x); },
          [](double x) {
            const double c = std::cosh(x);
            return 1.0 / (c * c);
          },
          [](double x) {
            const double c = std::cosh(x);
            return -2.0 * std::tanh(x) / (c * c);
          },
          1.0};
}

/// g(x) = x - 0.1 x^3
inline OdeDrift cubic_damped() {
  return {"cubic_damped", [](double x) { return x - 0.1 * x * x * x; },
          [](double x) { return 1.0 - 0.3 * x * x; }, [](double x) { return -0.6 * x; }, 1.0};
}

/// Registry lookup; `param` is the slope for "linear" and ignored otherwise.
inline OdeDrift by_name(const std::string& name, double param = 1.0) {
  if (name == "linear") return linear(param);
  if (name == "tanh") return tanh();
  if (name == "cubic_damped") return cubic_damped();
  throw InvalidParam("ode_dsm", "unknown drift '" + name + "' (linear, tanh, cubic_damped)");
}

}  // namespace drifts

template <DensityModel Q, DensityModel P>
double instantaneous_change(const Q& q, const P& p, const OdeDrift& drift,
                            const WeightedNodes& nodes) {
  return -detail::accumulate(nodes, [&](double x) {
    const double delta = p.score(x) - q.score(x);
    return delta * delta * drift.g_prime(x);
  }, "instantaneous_change").value;
}

template <DensityModel Q, DensityModel P>
double instantaneous_change(const Q& q, const P& p, const OdeDrift& drift,
                            const ExpectationBackend& e) {
  return instantaneous_change(q, p, drift, e.nodes(q));
}

struct EulerCheck {
  double analytic;
  double finite_diff;

  double relative_gap() const {
    return std::abs(finite_diff - analytic) / std::max(std::abs(analytic), 1e-300);
  }
};

/// Largest step for which delta * max|g'| stays below this on the nodes.
inline constexpr double kEulerStepBudget = 0.5;

/// [F(q_Y, p_Y) - F(q_X, p_X)] / delta with Y = x + delta g(x), against the
/// analytic rate. The y-side expectation reuses q's nodes mapped through the
/// Euler step, so both sides see the same discretization.
template <DensityModel Q, DensityModel P>
EulerCheck euler_pushforward_check(const Q& q, const P& p, const OdeDrift& drift, double delta,
                                   const WeightedNodes& nodes) {
  if (!(delta > 0.0)) throw InvalidParam("ode_dsm", "Euler check requires delta > 0");
  double max_slope = 0.0;
  for (double x : nodes.points) max_slope = std::max(max_slope, std::abs(drift.g_prime(x)));
  if (!(delta * max_slope < kEulerStepBudget)) {
    std::ostringstream os;
    os << "delta * max|g'| = " << delta * max_slope << " >= " << kEulerStepBudget
       << " on the evaluation grid";
    throw NonInvertible("ode_dsm", os.str());
  }

  const EulerStepFlow step(drift, delta);
  const auto q_y = pushforward(q, step);
  const auto p_y = pushforward(p, step);
  const WeightedNodes y_nodes = map_through(nodes, step);

  const double before = fisher_divergence(q, p, nodes).value;
  const double after = fisher_divergence(q_y, p_y, y_nodes).value;
  return {instantaneous_change(q, p, drift, nodes), (after - before) / delta};
}

template <DensityModel Q, DensityModel P>
EulerCheck euler_pushforward_check(const Q& q, const P& p, const OdeDrift& drift, double delta,
                                   const ExpectationBackend& e) {
  return euler_pushforward_check(q, p, drift, delta, e.nodes(q));
}

/// Two-level Richardson extrapolation of the Euler difference quotient from
/// steps delta, delta/2, delta/4 (error expansion c1 delta + c2 delta^2).
template <DensityModel Q, DensityModel P>
double richardson_rate(const Q& q, const P& p, const OdeDrift& drift, double delta,
                       const WeightedNodes& nodes) {
  const double d1 = euler_pushforward_check(q, p, drift, delta, nodes).finite_diff;
  const double d2 = euler_pushforward_check(q, p, drift, 0.5 * delta, nodes).finite_diff;
  const double d4 = euler_pushforward_check(q, p, drift, 0.25 * delta, nodes).finite_diff;
  const double r1 = 2.0 * d2 - d1;
  const double r2 = 2.0 * d4 - d2;
  return (4.0 * r2 - r1) / 3.0;
}

/// Least-squares slope of log(gap) against log(delta).
inline double convergence_order(std::span<const double> deltas, std::span<const double> gaps) {
  if (deltas.size() != gaps.size() || deltas.size() < 2) {
    throw InvalidParam("ode_dsm", "convergence_order needs matching series of length >= 2");
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(deltas.size());
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const double lx = std::log(deltas[i]);
    const double ly = std::log(gaps[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace dsmflow
