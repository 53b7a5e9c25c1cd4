#pragma once

// Numerical checks of the library's identities: scores against finite
// differences, quantile/CDF inversion, normalization, flow inversion, the
// flow and Riemannian equivalences for the diffusion Fisher divergence, the
// pointwise diffusion Stein identity, integration-by-parts constancy, and the
// ODE rate against an Euler step.
//
// Each check reports the worst error it saw next to the tolerance it was
// held to; `passed` is worst <= tolerance.

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dsmflow/densities.hpp"
#include "dsmflow/divergences.hpp"
#include "dsmflow/expectation.hpp"
#include "dsmflow/experiments.hpp"
#include "dsmflow/flows.hpp"
#include "dsmflow/ode_dsm.hpp"
#include "dsmflow/pushforward.hpp"
#include "dsmflow/rng.hpp"

namespace dsmflow::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

namespace detail {

inline CheckResult finish(std::string name, double worst, double tolerance, std::string detail = {}) {
  CheckResult r;
  r.name = std::move(name);
  r.worst = worst;
  r.tolerance = tolerance;
  r.passed = std::isfinite(worst) && worst <= tolerance;
  r.detail = std::move(detail);
  return r;
}

inline double uniform_in(UniformStream& rng, double lo, double hi) {
  return lo + (hi - lo) * rng.next();
}

/// Points drawn from d, kept inside its central mass.
template <DensityModel D>
std::vector<double> interior_points(const D& d, std::size_t n, std::uint64_t seed,
                                    double tail = 1e-4) {
  UniformStream rng(seed);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(d.quantile(tail + (1.0 - 2.0 * tail) * rng.next()));
  return out;
}

template <DensityModel D>
double worst_score_fd_error(const D& d, const std::vector<double>& xs) {
  double worst = 0.0;
  for (double x : xs) {
    const double h = 1e-5 * (1.0 + std::abs(x));
    const double fd = (d.log_pdf(x + h) - d.log_pdf(x - h)) / (2.0 * h);
    const double s = d.score(x);
    worst = std::max(worst, std::abs(s - fd) / (1.0 + std::abs(s)));
  }
  return worst;
}

// Five-point derivative, used where a plain central difference is too coarse.
template <class F>
double five_point(F&& f, double x, double h) {
  return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}

inline double relative(double a, double b, double floor = 0.0) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor, 1e-300});
}

inline ExpectationBackend backend_for(const StudentT& q, std::size_t n = 2048) {
  return default_quadrature(q, n);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// densities

/// |s(x) - FD(log p)(x)| <= 1e-5 (1 + |s(x)|) at 200 interior points per density.
inline CheckResult score_vs_finite_difference() {
  const StudentT t1(0.0, 0.3, 5.0);
  const StudentT t2(1.2, 0.7, 3.0);
  const Gaussian g(0.5, 2.0);
  const auto arctan_y = pushforward(t1, ArctanFlow(0.4, 0.6, ArctanPrefactor::MatchDiffusion));
  const auto gauss_y = pushforward(t2, GaussianFlow<StudentT>(StudentT(1.0, 0.7, 3.0)));
  double worst = 0.0;
  worst = std::max(worst, detail::worst_score_fd_error(t1, detail::interior_points(t1, 200, 1)));
  worst = std::max(worst, detail::worst_score_fd_error(t2, detail::interior_points(t2, 200, 2)));
  worst = std::max(worst, detail::worst_score_fd_error(g, detail::interior_points(g, 200, 3)));
  worst = std::max(worst, detail::worst_score_fd_error(arctan_y, detail::interior_points(arctan_y, 200, 4)));
  worst = std::max(worst, detail::worst_score_fd_error(gauss_y, detail::interior_points(gauss_y, 200, 5)));
  return detail::finish("densities: score matches finite differences of log_pdf", worst, 1e-5);
}

/// quantile(cdf(x)) = x to 1e-8 on the central 99.99% and cdf(quantile(u)) = u to 1e-10.
inline CheckResult quantile_cdf_inversion() {
  const std::vector<AnyDensity> densities{StudentT(0.0, 0.3, 5.0), StudentT(2.0, 1.0, 1.0),
                                          StudentT(-1.0, 0.5, 30.0), Gaussian(0.0, 1.0),
                                          Gaussian(3.0, 0.2)};
  double worst_x = 0.0;
  double worst_u = 0.0;
  for (const auto& d : densities) {
    const double lo = d.quantile(5e-5);
    const double hi = d.quantile(1.0 - 5e-5);
    for (int i = 0; i <= 400; ++i) {
      const double x = lo + (hi - lo) * i / 400.0;
      const double c = d.cdf(x);
      const double back = c < 0.5 ? d.quantile(c) : d.isf(d.sf(x));
      worst_x = std::max(worst_x, std::abs(back - x) / (1.0 + std::abs(x)));
    }
    for (int i = 1; i < 400; ++i) {
      const double u = i / 400.0;
      worst_u = std::max(worst_u, std::abs(d.cdf(d.quantile(u)) - u));
    }
  }
  const double worst = std::max(worst_x / 1e-8, worst_u / 1e-10);
  std::ostringstream os;
  os << "max |q(F(x)) - x| / (1 + |x|) = " << worst_x << ", max |F(q(u)) - u| = " << worst_u;
  return detail::finish("densities: quantile and CDF are mutual inverses", worst, 1.0, os.str());
}

/// integral of pdf over [loc - 50 scale, loc + 50 scale] plus the tail mass
/// from sf() is 1 to 1e-6.
inline CheckResult normalization() {
  double worst = 0.0;
  for (double dof : {3.0, 5.0, 10.0, 30.0}) {
    const StudentT t(0.0, 0.3, dof);
    // tail mass beyond 50 scale units comes from the CDF and is added back
    const double outside = 2.0 * t.sf(50.0 * 0.3);
    const double inside = integrate_pdf(t, {-15.0, 15.0}, 8192);
    worst = std::max(worst, std::abs(inside + outside - 1.0));
  }
  const Gaussian g(1.0, 2.0);
  worst = std::max(worst, std::abs(integrate_pdf(g, {-99.0, 101.0}, 8192) - 1.0));
  return detail::finish("densities: pdf integrates to one", worst, 1e-6);
}

/// Pushforward densities integrate to one over the flow's image (1e-5).
inline CheckResult pushforward_normalization() {
  const StudentT q(0.0, 0.3, 5.0);
  const StudentT p(-2.5, 0.3, 5.0);
  double worst = 0.0;
  for (ArctanPrefactor mode : {ArctanPrefactor::MatchAppendixD, ArctanPrefactor::MatchDiffusion}) {
    const ArctanFlow f(-2.5, 0.6, mode);
    worst = std::max(worst, std::abs(integrate_pdf(pushforward(q, f), f.image(), 8192) - 1.0));
    worst = std::max(worst, std::abs(integrate_pdf(pushforward(p, f), f.image(), 8192) - 1.0));
  }
  const GaussianFlow<StudentT> gf(StudentT(0.5, 0.3, 5.0));
  const auto qy = pushforward(q, gf);
  worst = std::max(worst, std::abs(integrate_pdf(qy, {qy.quantile(1e-9), qy.isf(1e-9)}, 8192) +
                                   2e-9 - 1.0));
  return detail::finish("densities: pushforward densities are normalized", worst, 1e-5);
}

/// Pushforward score = FD of pushforward log_pdf, to 1e-6 (1 + |s|).
inline CheckResult pushforward_score_identity() {
  const StudentT q(0.0, 0.3, 5.0);
  double worst = 0.0;
  auto check = [&](const auto& d, std::uint64_t seed) {
    for (double y : detail::interior_points(d, 200, seed, 1e-3)) {
      const double h = 1e-3 * (1.0 + std::abs(y)) * (d.isf(0.25) - d.quantile(0.25));
      const double fd = detail::five_point([&](double v) { return d.log_pdf(v); }, y, h);
      const double s = d.score(y);
      worst = std::max(worst, std::abs(s - fd) / (1.0 + std::abs(s)));
    }
  };
  check(pushforward(q, ArctanFlow(-2.5, 0.6, ArctanPrefactor::MatchAppendixD)), 11);
  check(pushforward(q, ArctanFlow(1.0, 0.6, ArctanPrefactor::MatchDiffusion)), 12);
  check(pushforward(q, GaussianFlow<StudentT>(StudentT(0.3, 0.3, 5.0))), 13);
  check(pushforward(q, EulerStepFlow(drifts::tanh(), 0.05)), 14);
  return detail::finish("densities: pushforward score identity", worst, 1e-6);
}

// ---------------------------------------------------------------------------
// flows

namespace detail {

inline std::vector<std::pair<std::string, AnyFlow>> sample_flows() {
  return {
      {"identity", IdentityFlow{}},
      {"affine", AffineFlow(2.0, 1.0)},
      {"arctan_diffusion", ArctanFlow(0.3, 0.6, ArctanPrefactor::MatchDiffusion)},
      {"arctan_appendix", ArctanFlow(-2.5, 0.6, ArctanPrefactor::MatchAppendixD)},
      {"gaussian", GaussianFlow<StudentT>(StudentT(0.2, 0.3, 5.0))},
      {"euler_tanh", EulerStepFlow(drifts::tanh(), 0.1)},
      {"euler_cubic", EulerStepFlow(drifts::cubic_damped(), 1e-3)},
  };
}

}  // namespace detail

/// inverse(forward(x)) = x to 1e-9 (1 + |x|) on 500 points of the central 99.9%.
inline CheckResult flow_round_trip() {
  const StudentT base(0.0, 0.3, 5.0);
  const double lo = base.quantile(5e-4);
  const double hi = base.isf(5e-4);
  double worst = 0.0;
  std::string where;
  for (const auto& [name, f] : detail::sample_flows()) {
    for (int i = 0; i < 500; ++i) {
      const double x = lo + (hi - lo) * i / 499.0;
      const double err = std::abs(f.inverse(f.forward(x)) - x) / (1.0 + std::abs(x));
      if (err > worst) {
        worst = err;
        where = name;
      }
    }
  }
  return detail::finish("flows: inverse(forward(x)) = x", worst, 1e-9, "worst flow: " + where);
}

/// d inverse / dy at y = T(x) equals 1 / T'(x), to 1e-8 relative.
inline CheckResult inverse_function_theorem() {
  const StudentT base(0.0, 0.3, 5.0);
  double worst = 0.0;
  std::string where;
  for (const auto& [name, f] : detail::sample_flows()) {
    for (int i = 0; i <= 100; ++i) {
      const double x = base.quantile(0.01 + 0.98 * i / 100.0);
      const double y = f.forward(x);
      const double h = 1e-3 * (1.0 + std::abs(y)) / std::max(1.0, 1.0 / f.jacobian(x));
      const double dinv = detail::five_point([&](double v) { return f.inverse(v); }, y, h);
      const double err = detail::relative(dinv, 1.0 / f.jacobian(x));
      if (err > worst) {
        worst = err;
        where = name;
      }
    }
  }
  return detail::finish("flows: inverse function theorem", worst, 1e-8, "worst flow: " + where);
}

/// forward strictly increasing and m(x) > 0 on a dense grid.
inline CheckResult monotone_and_positive() {
  double violations = 0.0;
  for (const auto& [name, f] : detail::sample_flows()) {
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 2000; ++i) {
      const double x = -6.0 + 12.0 * i / 2000.0;
      const double y = f.forward(x);
      if (!(y > prev)) violations += 1.0;
      if (!(f.diffusion_matrix(x) > 0.0)) violations += 1.0;
      prev = y;
    }
  }
  return detail::finish("flows: forward increasing and diffusion positive", violations, 0.0);
}

/// Analytic m' against central differences of m, to 1e-5 relative.
inline CheckResult diffusion_derivative_consistency() {
  double worst = 0.0;
  std::string where;
  for (const auto& [name, f] : detail::sample_flows()) {
    for (int i = 0; i <= 200; ++i) {
      const double x = -3.0 + 6.0 * i / 200.0;
      const double analytic = f.diffusion_derivative(x);
      const double fd = diffusion_matrix_derivative_fd(f, x);
      const double err = std::abs(analytic - fd) / std::max(1.0, std::abs(analytic));
      if (err > worst) {
        worst = err;
        where = name;
      }
    }
  }
  return detail::finish("flows: analytic dm/dx matches finite differences", worst, 1e-5,
                        "worst flow: " + where);
}

// ---------------------------------------------------------------------------
// divergences

/// diffusion_fisher(q, p, T) against fisher_divergence of the pushforwards,
/// the latter integrated on its own quadrature grid in y.
/// Tolerance: |a - b| <= 1e-5 (1 + value).
inline CheckResult flow_equivalence(int n_configs = 20, std::uint64_t seed = 2024) {
  UniformStream rng(seed);
  double worst = 0.0;
  std::ostringstream detail_os;
  for (int c = 0; c < n_configs; ++c) {
    const double dof = detail::uniform_in(rng, 3.0, 12.0);
    const double scale = detail::uniform_in(rng, 0.2, 1.0);
    const StudentT q(detail::uniform_in(rng, -1.0, 1.0), scale, dof);
    const StudentT p(detail::uniform_in(rng, -2.0, 2.0), scale * detail::uniform_in(rng, 0.7, 1.4), dof);
    const double flow_theta = detail::uniform_in(rng, -2.0, 2.0);
    const double b = detail::uniform_in(rng, 0.3, 2.0);
    const int kind = c % 4;

    const auto x_backend = detail::backend_for(q);
    const QuadratureSpec& xs = *x_backend.quadrature_spec();
    auto compare = [&](const auto& flow) {
      const double x_side = diffusion_fisher(q, p, flow, x_backend).value;
      const auto y_backend = ExpectationBackend::quadrature(flow.forward(xs.lo), flow.forward(xs.hi), 2048);
      const double y_side = fisher_divergence(pushforward(q, flow), pushforward(p, flow), y_backend).value;
      return std::abs(x_side - y_side) / (1.0 + std::abs(x_side));
    };
    double err = 0.0;
    switch (kind) {
      case 0: err = compare(ArctanFlow(flow_theta, b, ArctanPrefactor::MatchDiffusion)); break;
      case 1: err = compare(ArctanFlow(flow_theta, b, ArctanPrefactor::MatchAppendixD)); break;
      case 2: err = compare(GaussianFlow<StudentT>(StudentT(flow_theta, scale, dof))); break;
      default: err = compare(AffineFlow(b, flow_theta)); break;
    }
    worst = std::max(worst, err);
  }
  detail_os << n_configs << " configurations";
  return detail::finish("divergences: diffusion Fisher = Fisher of pushforwards", worst, 1e-5,
                        detail_os.str());
}

/// The diffusion Stein operator at x against the plain Stein operator of the
/// pushforward at y = T(x) with g = f o T^{-1}: |a - b| <= 1e-6 max(1, |b|).
inline CheckResult stein_operator_equivalence(int n_points = 200) {
  const StudentT p(0.4, 0.5, 5.0);
  const std::vector<TestFunction> tests{test_functions::tanh(), test_functions::gaussian_bump(),
                                        test_functions::rational()};
  double worst = 0.0;
  auto run = [&](const auto& flow) {
    const auto p_y = pushforward(p, flow);
    for (const auto& t : tests) {
      const TestFunction g = pull_back(t, flow);
      for (int i = 0; i < n_points; ++i) {
        const double x = -3.0 + 6.0 * (i + 0.5) / n_points;
        const double x_side = stein_operator_pointwise(p, flow, t, x);
        const double y_side = stein_operator(p_y, g, flow.forward(x));
        worst = std::max(worst, std::abs(x_side - y_side) / std::max(1.0, std::abs(y_side)));
      }
    }
  };
  run(ArctanFlow(1.0, 0.6, ArctanPrefactor::MatchDiffusion));
  run(GaussianFlow<StudentT>(StudentT(0.0, 0.3, 5.0)));
  return detail::finish("divergences: diffusion Stein operator = Stein operator of pushforward",
                        worst, 1e-6);
}

/// riemannian_fisher with G = m^-2 against diffusion_fisher, 1e-8 relative.
inline CheckResult riemannian_equivalence(int n_configs = 10, std::uint64_t seed = 7) {
  UniformStream rng(seed);
  double worst = 0.0;
  for (int c = 0; c < n_configs; ++c) {
    const double dof = detail::uniform_in(rng, 3.0, 10.0);
    const StudentT q(detail::uniform_in(rng, -1.0, 1.0), 0.3, dof);
    const StudentT p(detail::uniform_in(rng, -2.0, 2.0), 0.3, dof);
    const auto nodes = detail::backend_for(q).nodes(q);
    auto compare = [&](const auto& flow) {
      const double a = riemannian_fisher(q, p, metric_from_flow(flow), nodes).value;
      const double b = diffusion_fisher(q, p, flow, nodes).value;
      return detail::relative(a, b);
    };
    const double theta = detail::uniform_in(rng, -2.0, 2.0);
    worst = std::max(worst, c % 2 == 0
                                ? compare(ArctanFlow(theta, 0.6, ArctanPrefactor::MatchDiffusion))
                                : compare(GaussianFlow<StudentT>(StudentT(theta, 0.3, dof))));
  }
  return detail::finish("divergences: Riemannian form with G = m^-2 = diffusion Fisher", worst, 1e-8);
}

/// Fisher - SM and diffusion Fisher - DSM do not depend on p's location
/// (flow fixed): spread over five locations <= 1e-5. The manual flow's m
/// grows like x^2, so a truncated range would leave a boundary term; the
/// whole-line rule is used instead.
inline CheckResult integration_by_parts_constancy() {
  const StudentT q(0.0, 0.3, 5.0);
  const auto nodes = whole_line_nodes(q, 0.0, 0.3);
  const ArctanFlow manual(0.7, 0.6, ArctanPrefactor::MatchDiffusion);
  const GaussianFlow<StudentT> gauss(StudentT(0.7, 0.3, 5.0));
  std::vector<double> sm_gap, manual_gap, gauss_gap;
  for (double theta : {-3.0, -1.0, 0.0, 1.0, 3.0}) {
    const StudentT p(theta, 0.3, 5.0);
    sm_gap.push_back(fisher_divergence(q, p, nodes).value - score_matching_loss(p, nodes).value);
    manual_gap.push_back(diffusion_fisher(q, p, manual, nodes).value - dsm_loss(p, manual, nodes).value);
    gauss_gap.push_back(diffusion_fisher(q, p, gauss, nodes).value - dsm_loss(p, gauss, nodes).value);
  }
  auto spread = [](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
  };
  const double worst = std::max({spread(sm_gap), spread(manual_gap), spread(gauss_gap)});
  return detail::finish("divergences: integration-by-parts constants are location-free", worst, 1e-5);
}

/// diffusion_fisher(q, q, T) <= 1e-10 for every sample flow.
inline CheckResult divergence_validity() {
  const StudentT q(0.3, 0.3, 5.0);
  const auto nodes = detail::backend_for(q).nodes(q);
  double worst = 0.0;
  for (const auto& [name, f] : detail::sample_flows()) {
    worst = std::max(worst, std::abs(diffusion_fisher(q, q, f, nodes).value));
  }
  return detail::finish("divergences: diffusion Fisher vanishes at p = q", worst, 1e-10);
}

/// E_q[Stein operator] = 0 at p = q for five bounded smooth test functions,
/// plain and with diffusion.
inline CheckResult stein_identity() {
  const StudentT q(0.0, 0.3, 5.0);
  // sin(x) keeps oscillating in the tails, which the whole-line map squeezes
  // into the endpoints; a wide plain range resolves it and leaves a boundary
  // term m q f of about 1e-9 at +-120.
  const auto nodes = ExpectationBackend::quadrature(-120.0, 120.0, 16384).nodes(q);
  const std::vector<TestFunction> tests{test_functions::tanh(), test_functions::sine(),
                                        test_functions::gaussian_bump(), test_functions::rational(),
                                        test_functions::shifted_arctan()};
  const ArctanFlow manual(0.5, 0.6, ArctanPrefactor::MatchDiffusion);
  const GaussianFlow<StudentT> gauss(StudentT(0.0, 0.3, 5.0));
  double worst = 0.0;
  for (const auto& t : tests) {
    worst = std::max(worst, std::abs(stein_value(q, t, nodes).value));
    worst = std::max(worst, std::abs(dsd_value(q, manual, t, nodes).value));
    worst = std::max(worst, std::abs(dsd_value(q, gauss, t, nodes).value));
  }
  return detail::finish("divergences: Stein identity at p = q", worst, 1e-6);
}

/// Stein value at f* = s_p - s_q equals 2 F(q, p), to 1e-6 relative.
inline CheckResult optimal_test_function_ratio() {
  const StudentT q(0.0, 0.3, 5.0);
  const auto nodes = detail::backend_for(q).nodes(q);
  double worst = 0.0;
  for (double theta : {-2.0, -0.5, 0.25, 1.0, 3.0}) {
    const StudentT p(theta, 0.3, 5.0);
    const double s = stein_value(p, optimal_test_function(q, p), nodes).value;
    const double f = fisher_divergence(q, p, nodes).value;
    worst = std::max(worst, detail::relative(s, 2.0 * f));
  }
  return detail::finish("divergences: optimal test function gives 2 x Fisher", worst, 1e-6);
}

/// MC with 1e6 inverse-CDF samples within 3 standard errors of quadrature.
inline CheckResult backend_agreement(std::size_t n = 1000000) {
  const StudentT q(0.0, 0.3, 5.0);
  const StudentT p(0.5, 0.3, 5.0);
  const double quad = fisher_divergence(q, p, detail::backend_for(q)).value;
  const SampleSet s = sample(q, n, 12345);
  double mean = 0.0, sq = 0.0;
  for (double x : s.values) {
    const double d = p.score(x) - q.score(x);
    const double v = 0.5 * d * d;
    mean += v;
    sq += v * v;
  }
  mean /= static_cast<double>(n);
  const double var = sq / static_cast<double>(n) - mean * mean;
  const double se = std::sqrt(var / static_cast<double>(n));
  std::ostringstream os;
  os << "quadrature " << quad << ", MC " << mean << " +- " << se;
  return detail::finish("divergences: Monte Carlo agrees with quadrature", std::abs(mean - quad) / se,
                        3.0, os.str());
}

// ---------------------------------------------------------------------------
// ode_dsm

/// Euler difference quotient at delta = 1e-5 within 1e-3 relative of the
/// analytic rate for three drifts, and first-order gap decay over
/// delta in {1e-3, 1e-4, 1e-5} (fitted order in [0.8, 1.2] unless the gap is
/// already at roundoff).
inline CheckResult ode_euler_agreement() {
  const StudentT q(0.0, 0.3, 5.0);
  const StudentT p(0.6, 0.3, 5.0);
  const auto nodes = detail::backend_for(q).nodes(q);
  double worst = 0.0;
  std::ostringstream os;
  for (const OdeDrift& d : {drifts::linear(1.0), drifts::tanh(), drifts::cubic_damped()}) {
    const std::vector<double> deltas{1e-3, 1e-4, 1e-5};
    std::vector<double> gaps;
    for (double delta : deltas) gaps.push_back(euler_pushforward_check(q, p, d, delta, nodes).relative_gap());
    const double order = convergence_order(deltas, gaps);
    worst = std::max(worst, gaps.back() / 1e-3);
    if (!(order > 0.8 && order < 1.2)) worst = std::max(worst, 2.0);
    os << d.name << ": gap(1e-5) = " << gaps.back() << ", order = " << order << "; ";
  }
  return detail::finish("ode_dsm: Euler step matches instantaneous change", worst, 1.0, os.str());
}

/// Richardson extrapolation from delta in {1e-3, 5e-4, 2.5e-4} recovers the
/// analytic rate to 1e-4 relative.
inline CheckResult ode_richardson() {
  const StudentT q(0.0, 0.3, 5.0);
  const StudentT p(-0.4, 0.3, 5.0);
  const auto nodes = detail::backend_for(q).nodes(q);
  double worst = 0.0;
  for (const OdeDrift& d : {drifts::linear(0.5), drifts::tanh(), drifts::cubic_damped()}) {
    const double rate = instantaneous_change(q, p, d, nodes);
    worst = std::max(worst, detail::relative(richardson_rate(q, p, d, 1e-3, nodes), rate));
  }
  return detail::finish("ode_dsm: Richardson-extrapolated Euler rate", worst, 1e-4);
}

// ---------------------------------------------------------------------------

/// Every check above, in a fixed order.
inline std::vector<CheckResult> run_all() {
  using Check = std::function<CheckResult()>;
  const std::vector<Check> checks{
      score_vs_finite_difference,       quantile_cdf_inversion,
      normalization,                    pushforward_normalization,
      pushforward_score_identity,       [] { return flow_round_trip(); },
      inverse_function_theorem,         monotone_and_positive,
      diffusion_derivative_consistency, [] { return flow_equivalence(); },
      [] { return stein_operator_equivalence(); },
      [] { return riemannian_equivalence(); },
      integration_by_parts_constancy,   divergence_validity,
      stein_identity,                   optimal_test_function_ratio,
      [] { return backend_agreement(); },
      ode_euler_agreement,              ode_richardson,
  };
  std::vector<CheckResult> out;
  for (const auto& c : checks) {
    try {
      out.push_back(c());
    } catch (const std::exception& e) {
      out.push_back({"(check raised)", false, std::numeric_limits<double>::infinity(), 0.0, e.what()});
    }
  }
  return out;
}

}  // namespace dsmflow::verify
