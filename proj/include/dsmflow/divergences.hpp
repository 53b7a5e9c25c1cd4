#pragma once

// Score-based objectives in one dimension, each evaluated as E_q[integrand]
// over a prepared set of weighted nodes. With Delta = s_p - s_q and a flow
// inducing m = 1 / T' (m' = dm/dx):
//
//   fisher_divergence     1/2 E[Delta^2]
//   score_matching_loss   E[1/2 s_p^2 + s_p']
//   diffusion_fisher      1/2 E[(m Delta)^2]
//   dsm_loss              E[1/2 (m s_p)^2 + (m^2 s_p)']
//   stein_value           E[s_p f + f']
//   dsd_value             E[m s_p f + (m f)']
//   riemannian_fisher     1/2 E[Delta^2 / G]
//
// Every objective also accepts an ExpectationBackend, which is turned into
// nodes for q first. Hot loops (sweeps) should build the nodes once.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>

#include "dsmflow/densities.hpp"
#include "dsmflow/error.hpp"
#include "dsmflow/expectation.hpp"
#include "dsmflow/flows.hpp"
#include "dsmflow/numeric.hpp"

namespace dsmflow {

struct DivergenceResult {
  double value = 0.0;
  double integrand_min = 0.0;
  double integrand_max = 0.0;
  std::string backend_info;
};

/// A scalar test function f with its derivative; an empty derivative means
/// central differences.
struct TestFunction {
  std::string name;
  std::function<double(double)> evaluator;
  std::function<double(double)> derivative_fn;

  double operator()(double x) const { return evaluator(x); }
  double derivative(double x) const {
    if (derivative_fn) return derivative_fn(x);
    return central_difference(evaluator, x);
  }
};

namespace test_functions {

inline TestFunction identity() {
  return {"identity", [](double x) { return x; }, [](double) { return 1.0; }};
}

inline TestFunction constant(double c) {
  return {"constant", [c](double) { return c; }, [](double) { return 0.0; }};
}

inline TestFunction tanh() {
  return {"tanh", [](double x) { return std::tanh(x); },
          [](double x) {
            const double c = std::cosh(x);
            return 1.0 / (c * c);
          }};
}

inline TestFunction sine() {
  return {"sin", [](double x) { return std::sin(x); }, [](double x) { return std::cos(x); }};
}

inline TestFunction gaussian_bump() {
  return {"gaussian_bump", [](double x) { return std::exp(-x * x); },
          [](double x) { return -2.0 * x * std::exp(-x * x); }};
}

/// x / (1 + x^2)
inline TestFunction rational() {
  return {"rational", [](double x) { return x / (1.0 + x * x); },
          [](double x) {
            const double s = 1.0 + x * x;
            return (1.0 - x * x) / (s * s);
          }};
}

/// arctan(x - 1): bounded, not odd, so it exercises asymmetric integrands.
inline TestFunction shifted_arctan() {
  return {"shifted_arctan", [](double x) { return std::atan(x - 1.0); },
          [](double x) { return 1.0 / (1.0 + (x - 1.0) * (x - 1.0)); }};
}

}  // namespace test_functions

/// Positive 1-D metric tensor G(x).
struct RiemannianMetric {
  std::function<double(double)> g_of_x;

  double operator()(double x) const { return g_of_x(x); }
};

/// G(x) = m(x)^{-2}, the metric under which the Riemannian Fisher divergence
/// is the diffusion Fisher divergence.
template <FlowModel F>
RiemannianMetric metric_from_flow(F flow) {
  return {[flow = std::move(flow)](double x) {
    const double m = diffusion_matrix(flow, x);
    return 1.0 / (m * m);
  }};
}

namespace detail {

template <class H>
DivergenceResult accumulate(const WeightedNodes& nodes, H&& integrand, const char* what) {
  DivergenceResult r;
  r.backend_info = nodes.info;
  r.integrand_min = std::numeric_limits<double>::infinity();
  r.integrand_max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double v = integrand(nodes.points[i]);
    r.integrand_min = std::min(r.integrand_min, v);
    r.integrand_max = std::max(r.integrand_max, v);
    sum += nodes.weights[i] * v;
  }
  if (!std::isfinite(sum)) {
    throw BackendError("divergences", std::string(what) + " produced a non-finite value");
  }
  r.value = sum;
  return r;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Node-level evaluators.

template <DensityModel Q, DensityModel P>
DivergenceResult fisher_divergence(const Q& q, const P& p, const WeightedNodes& nodes) {
  return detail::accumulate(nodes, [&](double x) {
    const double delta = p.score(x) - q.score(x);
    return 0.5 * delta * delta;
  }, "fisher_divergence");
}

template <DensityModel P>
DivergenceResult score_matching_loss(const P& p, const WeightedNodes& nodes) {
  return detail::accumulate(nodes, [&](double x) {
    const double s = p.score(x);
    return 0.5 * s * s + score_derivative(p, x);
  }, "score_matching_loss");
}

template <DensityModel Q, DensityModel P, FlowModel F>
DivergenceResult diffusion_fisher(const Q& q, const P& p, const F& flow, const WeightedNodes& nodes) {
  return detail::accumulate(nodes, [&](double x) {
    const double md = diffusion_matrix(flow, x) * (p.score(x) - q.score(x));
    return 0.5 * md * md;
  }, "diffusion_fisher");
}

// (m^2 s)' = 2 m m' s + m^2 s'
template <DensityModel P, FlowModel F>
DivergenceResult dsm_loss(const P& p, const F& flow, const WeightedNodes& nodes) {
  return detail::accumulate(nodes, [&](double x) {
    const DiffusionValue d = diffusion(flow, x);
    const double s = p.score(x);
    const double ms = d.m * s;
    return 0.5 * ms * ms + 2.0 * d.m * d.dm * s + d.m * d.m * score_derivative(p, x);
  }, "dsm_loss");
}

/// s_p(x) f(x) + f'(x)
template <DensityModel P>
double stein_operator(const P& p, const TestFunction& t, double x) {
  return p.score(x) * t(x) + t.derivative(x);
}

template <DensityModel P>
DivergenceResult stein_value(const P& p, const TestFunction& t, const WeightedNodes& nodes) {
  return detail::accumulate(nodes, [&](double x) { return stein_operator(p, t, x); },
                            "stein_value");
}

/// The diffusion Stein operator (m s_p) f + (m f)' at one point.
template <DensityModel P, FlowModel F>
double stein_operator_pointwise(const P& p, const F& flow, const TestFunction& t, double x) {
  const DiffusionValue d = diffusion(flow, x);
  const double f = t(x);
  return d.m * p.score(x) * f + d.dm * f + d.m * t.derivative(x);
}

template <DensityModel P, FlowModel F>
DivergenceResult dsd_value(const P& p, const F& flow, const TestFunction& t,
                           const WeightedNodes& nodes) {
  return detail::accumulate(nodes, [&](double x) { return stein_operator_pointwise(p, flow, t, x); },
                            "dsd_value");
}

template <DensityModel Q, DensityModel P>
DivergenceResult riemannian_fisher(const Q& q, const P& p, const RiemannianMetric& metric,
                                   const WeightedNodes& nodes) {
  return detail::accumulate(nodes, [&](double x) {
    const double g = metric(x);
    if (!(g > 0.0)) {
      std::ostringstream os;
      os.precision(17);
      os << "G(" << x << ") = " << g << " is not positive";
      throw NonPositiveMetric("divergences", os.str());
    }
    const double delta = p.score(x) - q.score(x);
    return 0.5 * delta * delta / g;
  }, "riemannian_fisher");
}

/// f*(x) = s_p(x) - s_q(x), proportionality constant fixed to 1.
template <DensityModel Q, DensityModel P>
TestFunction optimal_test_function(const Q& q, const P& p) {
  return {"optimal", [q, p](double x) { return p.score(x) - q.score(x); },
          [q, p](double x) { return score_derivative(p, x) - score_derivative(q, x); }};
}

/// g(y) = f(T^{-1}(y)). The derivative is left to central differences.
template <FlowModel F>
TestFunction pull_back(const TestFunction& t, F flow) {
  return {t.name + "_pulled_back", [t, flow = std::move(flow)](double y) { return t(flow.inverse(y)); },
          {}};
}

// ---------------------------------------------------------------------------
// Backend-level entry points.

template <DensityModel Q, DensityModel P>
DivergenceResult fisher_divergence(const Q& q, const P& p, const ExpectationBackend& e) {
  return fisher_divergence(q, p, e.nodes(q));
}

template <DensityModel Q, DensityModel P>
DivergenceResult score_matching_loss(const Q& q, const P& p, const ExpectationBackend& e) {
  return score_matching_loss(p, e.nodes(q));
}

template <DensityModel Q, DensityModel P, FlowModel F>
DivergenceResult diffusion_fisher(const Q& q, const P& p, const F& flow, const ExpectationBackend& e) {
  return diffusion_fisher(q, p, flow, e.nodes(q));
}

template <DensityModel Q, DensityModel P, FlowModel F>
DivergenceResult dsm_loss(const Q& q, const P& p, const F& flow, const ExpectationBackend& e) {
  return dsm_loss(p, flow, e.nodes(q));
}

template <DensityModel Q, DensityModel P>
DivergenceResult stein_value(const Q& q, const P& p, const TestFunction& t,
                             const ExpectationBackend& e) {
  return stein_value(p, t, e.nodes(q));
}

template <DensityModel Q, DensityModel P, FlowModel F>
DivergenceResult dsd_value(const Q& q, const P& p, const F& flow, const TestFunction& t,
                           const ExpectationBackend& e) {
  return dsd_value(p, flow, t, e.nodes(q));
}

template <DensityModel Q, DensityModel P>
DivergenceResult riemannian_fisher(const Q& q, const P& p, const RiemannianMetric& metric,
                                   const ExpectationBackend& e) {
  return riemannian_fisher(q, p, metric, e.nodes(q));
}

}  // namespace dsmflow
