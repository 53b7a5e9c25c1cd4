#include <catch_amalgamated.hpp>

#include "dsmflow/divergences.hpp"
#include "dsmflow/expectation.hpp"
#include "dsmflow/pushforward.hpp"
#include "support.hpp"

using namespace dsmflow;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double t_score(double x, double loc, double scale, double nu) {
  const double d = x - loc;
  return -(nu + 1) * d / (nu * scale * scale + d * d);
}

ExpectationBackend wide(double lo, double hi, std::size_t n = 4096) {
  return ExpectationBackend::quadrature(lo, hi, n);
}

}  // namespace

// ---------------------------------------------------------------------------
// Backends

TEST_CASE("quadrature returns the mass of q") {
  const StudentT q(0.0, 0.3, 5.0);
  const auto nodes = default_quadrature(q).nodes(q);
  double mass = 0.0;
  for (double w : nodes.weights) mass += w;
  CHECK_THAT(mass, WithinAbs(1.0, 1e-6));

  const auto trap = ExpectationBackend::quadrature(-12, 12, 8192, QuadratureRule::Trapezoid).nodes(q);
  mass = 0.0;
  for (double w : trap.weights) mass += w;
  CHECK_THAT(mass, WithinAbs(1.0, 1e-6));
}

TEST_CASE("Gauss-Legendre nodes integrate polynomials exactly") {
  const auto [x, w] = gauss_legendre(16);
  double s0 = 0, s30 = 0, s31 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s0 += w[i];
    s30 += w[i] * std::pow(x[i], 30);
    s31 += w[i] * std::pow(x[i], 31);
  }
  CHECK_THAT(s0, WithinAbs(2.0, 1e-15));
  CHECK_THAT(s30, WithinRel(2.0 / 31.0, 1e-13));
  CHECK_THAT(s31, WithinAbs(0.0, 1e-15));
}

TEST_CASE("backends reject bad ranges and record what they are") {
  const StudentT q(0.0, 0.3, 5.0);
  CHECK_THROWS_AS(wide(-1, 1).nodes(q), BackendError);
  CHECK_THROWS_AS(ExpectationBackend::quadrature(1, -1), InvalidParam);
  CHECK_THROWS_AS(ExpectationBackend::quadrature(-1, 1, 16), InvalidParam);
  CHECK_THROWS_AS(ExpectationBackend::monte_carlo(SampleSet{}), InvalidParam);
  const auto r = fisher_divergence(q, StudentT(1, 0.3, 5), default_quadrature(q));
  CHECK(r.backend_info.find("gauss_legendre") != std::string::npos);
  CHECK(r.integrand_min >= 0.0);
  CHECK(r.integrand_max >= r.integrand_min);
}

TEST_CASE("Monte Carlo backend is a plain average over the samples") {
  const SampleSet s{{-1.0, 0.5, 2.0}};
  const Gaussian q(0, 1), p(1, 1);
  const auto r = fisher_divergence(q, p, ExpectationBackend::monte_carlo(s));
  CHECK_THAT(r.value, WithinAbs(0.5, 1e-15));  // Delta = 1 everywhere
  CHECK(r.backend_info == "monte_carlo(n=3)");
}

// ---------------------------------------------------------------------------
// Fisher divergence and score matching

TEST_CASE("Fisher divergence between Gaussians") {
  const Gaussian q(0, 1);
  const auto e = wide(-40, 40);
  CHECK(fisher_divergence(q, q, e).value == 0.0);
  for (double mu : {-2.0, 0.5, 3.0}) {
    CHECK_THAT(fisher_divergence(q, Gaussian(mu, 1), e).value, WithinRel(mu * mu / 2, 1e-12));
  }
  // different widths: Delta = x (1 - 1 / s^2), so F = (1 - 1/s^2)^2 / 2
  CHECK_THAT(fisher_divergence(q, Gaussian(0, 2), e).value, WithinRel(0.5 * 0.75 * 0.75, 1e-12));
}

TEST_CASE("Fisher divergence for Student-t against an adaptive oracle") {
  const StudentT q(0, 0.3, 5), p(1, 0.3, 5);
  const double value = fisher_divergence(q, p, wide(-20, 20, 2048)).value;
  const double oracle = support::adaptive([](double x) {
    const double d = t_score(x, 1, 0.3, 5) - t_score(x, 0, 0.3, 5);
    return 0.5 * d * d * support::t_pdf(x, 0, 0.3, 5);
  }, -20, 20, 1e-13);
  CHECK_THAT(value, WithinRel(oracle, 1e-6));
}

TEST_CASE("score matching loss for Gaussians") {
  const Gaussian q(0, 1);
  const auto e = wide(-40, 40);
  for (double mu : {0.0, 1.0, -2.5}) {
    CHECK_THAT(score_matching_loss(q, Gaussian(mu, 1), e).value, WithinAbs((mu * mu - 1) / 2, 1e-12));
  }
}

TEST_CASE("score matching differs from Fisher by a constant of q", "[property]") {
  const StudentT q(0.0, 0.3, 5.0);
  const auto nodes = whole_line_nodes(q, 0.0, 0.3);
  // F - SM = 1/2 E_q[s_q^2], half the location Fisher information (nu + 1) / ((nu + 3) scale^2)
  const double c = support::adaptive([](double x) {
    const double s = t_score(x, 0, 0.3, 5);
    return 0.5 * s * s * support::t_pdf(x, 0, 0.3, 5);
  }, -200, 200, 1e-13);
  CHECK_THAT(c, WithinRel(0.5 * 6.0 / (8.0 * 0.09), 1e-9));
  for (double theta : {-3.0, -1.0, 0.0, 1.0, 3.0}) {
    const StudentT p(theta, 0.3, 5.0);
    const double gap = fisher_divergence(q, p, nodes).value - score_matching_loss(p, nodes).value;
    CHECK_THAT(gap, WithinAbs(c, 1e-6));
  }
}

TEST_CASE("score matching on the golden-size Monte Carlo set turns near zero") {
  const StudentT q(0.0, 0.3, 5.0);
  const auto e = ExpectationBackend::monte_carlo(sample(q, 300, 42));
  auto grad = [&](double theta) {
    const double h = 1e-4;
    return (score_matching_loss(q, StudentT(theta + h, 0.3, 5), e).value -
            score_matching_loss(q, StudentT(theta - h, 0.3, 5), e).value) / (2 * h);
  };
  CHECK(std::isfinite(score_matching_loss(q, q, e).value));
  // the sample minimiser sits within 0.1 of the truth
  CHECK(grad(-0.1) < 0.0);
  CHECK(grad(0.1) > 0.0);
}

// ---------------------------------------------------------------------------
// Diffusion Fisher and DSM

TEST_CASE("identity flow reduces the diffusion objectives to the plain ones") {
  const StudentT q(0.0, 0.3, 5.0), p(0.8, 0.4, 4.0);
  const auto nodes = default_quadrature(q).nodes(q);
  const IdentityFlow id;
  CHECK(diffusion_fisher(q, p, id, nodes).value == fisher_divergence(q, p, nodes).value);
  CHECK(dsm_loss(p, id, nodes).value == score_matching_loss(p, nodes).value);
  const auto t = test_functions::tanh();
  CHECK(dsd_value(p, id, t, nodes).value == stein_value(p, t, nodes).value);
}

TEST_CASE("DSM at a single point") {
  const auto e = ExpectationBackend::monte_carlo(SampleSet{{0.0}});
  const Gaussian p(0, 1);
  CHECK(dsm_loss(p, p, IdentityFlow{}, e).value == -1.0);
}

TEST_CASE("diffusion Fisher equals Fisher of the pushforwards, y-space oracle") {
  // Everything on the y side is rebuilt here: inverse map, Jacobian, the
  // pushforward densities, and their scores by differences of log density.
  const double theta = 1.0, b = 0.6;
  auto x_of = [&](double y) { return std::sqrt(b) * std::tan(y / std::sqrt(b)) + theta; };
  auto log_density_y = [&](double y, double loc) {
    const double x = x_of(y);
    return std::log(support::t_pdf(x, loc, 0.3, 5)) + std::log1p((x - theta) * (x - theta) / b);
  };
  auto integrand = [&](double y) {
    const double h = 1e-4;
    const double sq = support::derivative([&](double v) { return log_density_y(v, 0.0); }, y, h);
    const double sp = support::derivative([&](double v) { return log_density_y(v, 1.0); }, y, h);
    return 0.5 * (sp - sq) * (sp - sq) * std::exp(log_density_y(y, 0.0));
  };
  const ArctanFlow f(theta, b, ArctanPrefactor::MatchDiffusion);
  const double lo = f.forward(-12.0), hi = f.forward(12.0);
  // the integrand carries ~1e-10 of difference noise, so ask for 1e-9
  const double oracle = support::adaptive(integrand, lo, hi, 1e-9);

  const StudentT q(0, 0.3, 5), p(1, 0.3, 5);
  const double x_side = diffusion_fisher(q, p, f, default_quadrature(q)).value;
  CHECK_THAT(x_side, WithinRel(oracle, 1e-5));
}

TEST_CASE("diffusion Fisher vanishes only at p = q") {
  const StudentT q(0.0, 0.3, 5.0);
  const auto nodes = default_quadrature(q).nodes(q);
  const GaussianFlow<StudentT> g(StudentT(0.5, 0.3, 5));
  CHECK(diffusion_fisher(q, q, g, nodes).value == 0.0);
  CHECK(diffusion_fisher(q, StudentT(0.01, 0.3, 5), g, nodes).value > 0.0);
}

TEST_CASE("DSM differs from diffusion Fisher by a constant when the flow is fixed", "[property]") {
  const StudentT q(0.0, 0.3, 5.0);
  const auto nodes = whole_line_nodes(q, 0.0, 0.3);
  const ArctanFlow f(0.5, 0.6, ArctanPrefactor::MatchDiffusion);
  // C = 1/2 E_q[(m s_q)^2] + E_q[(m^2 s_q)'] ... collapsed: check constancy directly
  std::vector<double> gaps;
  for (double theta : {-3.0, -1.0, 0.0, 1.0, 3.0}) {
    const StudentT p(theta, 0.3, 5.0);
    gaps.push_back(diffusion_fisher(q, p, f, nodes).value - dsm_loss(p, f, nodes).value);
  }
  for (double g : gaps) CHECK_THAT(g, WithinAbs(gaps.front(), 1e-8));
  // and the constant is 1/2 E_q[(m s_q)^2]
  const double c = support::adaptive([](double x) {
    const double m = 1.0 + (x - 0.5) * (x - 0.5) / 0.6;
    const double ms = m * t_score(x, 0, 0.3, 5);
    return 0.5 * ms * ms * support::t_pdf(x, 0, 0.3, 5);
  }, -3000, 3000, 1e-12);
  CHECK_THAT(gaps.front(), WithinRel(c, 1e-6));
}

// ---------------------------------------------------------------------------
// Stein objectives

TEST_CASE("Stein values for Gaussians") {
  const Gaussian q(0, 1);
  const auto e = wide(-40, 40);
  CHECK_THAT(stein_value(q, q, test_functions::identity(), e).value, WithinAbs(0.0, 1e-13));
  for (double mu : {-1.0, 0.3, 2.0}) {
    CHECK_THAT(stein_value(q, Gaussian(mu, 1), test_functions::constant(1.0), e).value,
               WithinAbs(mu, 1e-12));
  }
}

TEST_CASE("optimal test function") {
  const Gaussian q(0, 1);
  const auto same = optimal_test_function(q, q);
  const auto shifted = optimal_test_function(q, Gaussian(1.5, 1));
  const StudentT a(0, 0.3, 5), b(0.7, 0.4, 3);
  const auto tt = optimal_test_function(a, b);
  for (double x : {-2.0, 0.0, 1.0}) {
    CHECK(same(x) == 0.0);
    CHECK_THAT(shifted(x), WithinAbs(1.5, 1e-15));
    CHECK(tt(x) == b.score(x) - a.score(x));
  }
}

TEST_CASE("optimal test function gives twice the Fisher divergence", "[property]") {
  const StudentT q(0.0, 0.3, 5.0);
  const auto nodes = default_quadrature(q).nodes(q);
  for (double theta = -3.0; theta <= 3.0; theta += 0.5) {
    if (theta == 0.0) continue;
    const StudentT p(theta, 0.3, 5.0);
    const double ratio = stein_value(p, optimal_test_function(q, p), nodes).value /
                         fisher_divergence(q, p, nodes).value;
    CHECK_THAT(ratio, WithinRel(2.0, 1e-6));
  }
}

TEST_CASE("test function derivatives match differences", "[property]") {
  for (const auto& t : {test_functions::identity(), test_functions::constant(2.0), test_functions::tanh(),
                        test_functions::sine(), test_functions::gaussian_bump(),
                        test_functions::rational(), test_functions::shifted_arctan()}) {
    for (double x = -4.0; x <= 4.0; x += 0.25) {
      const double fd = support::derivative(t.evaluator, x, 1e-3);
      INFO(t.name << " x=" << x);
      CHECK_THAT(t.derivative(x), WithinAbs(fd, 1e-5 * std::max(1.0, std::abs(fd))));
    }
  }
  const TestFunction no_derivative{"cube", [](double x) { return x * x * x; }, {}};
  CHECK_THAT(no_derivative.derivative(2.0), WithinRel(12.0, 1e-8));
}

TEST_CASE("pointwise diffusion Stein operator") {
  const Gaussian p(0, 1);
  CHECK(stein_operator_pointwise(p, IdentityFlow{}, test_functions::identity(), 1.0) == 0.0);
  const StudentT t(0.2, 0.5, 5);
  const ArctanFlow f(0.1, 0.6, ArctanPrefactor::MatchDiffusion);
  CHECK(stein_operator_pointwise(t, f, test_functions::constant(0.0), 0.7) == 0.0);

  // (m s_p) f + (m f)' with (m f)' by differences
  const auto tanh = test_functions::tanh();
  for (double x : {-2.0, 0.0, 0.7, 1.9}) {
    const double mf = support::derivative([&](double v) { return f.diffusion_matrix(v) * std::tanh(v); },
                                          x, 1e-3);
    const double expected = f.diffusion_matrix(x) * t.score(x) * std::tanh(x) + mf;
    CHECK_THAT(stein_operator_pointwise(t, f, tanh, x), WithinAbs(expected, 1e-9));
  }

  // y side at x = 0.7
  const auto p_y = pushforward(t, f);
  const double y = f.forward(0.7);
  CHECK_THAT(stein_operator(p_y, pull_back(tanh, f), y),
             WithinRel(stein_operator_pointwise(t, f, tanh, 0.7), 1e-6));
}

TEST_CASE("DSD equals the Stein value of the pushforwards") {
  const StudentT q(0.0, 0.3, 5.0), p(0.6, 0.3, 5.0);
  const ArctanFlow f(1.0, 0.6, ArctanPrefactor::MatchDiffusion);
  const auto t = test_functions::tanh();
  const double x_side = dsd_value(q, p, f, t, default_quadrature(q)).value;
  const auto qy = pushforward(q, f);
  const double y_side = stein_value(qy, pushforward(p, f), pull_back(t, f),
                                    wide(f.forward(-12.0), f.forward(12.0))).value;
  CHECK_THAT(x_side, WithinRel(y_side, 1e-5));
}

// ---------------------------------------------------------------------------
// Riemannian form

TEST_CASE("Riemannian Fisher divergence") {
  const StudentT q(0.0, 0.3, 5.0), p(1.0, 0.3, 5.0);
  const auto nodes = default_quadrature(q).nodes(q);
  const double fisher = fisher_divergence(q, p, nodes).value;
  CHECK_THAT(riemannian_fisher(q, p, RiemannianMetric{[](double) { return 1.0; }}, nodes).value,
             WithinRel(fisher, 1e-15));
  CHECK_THAT(riemannian_fisher(q, p, RiemannianMetric{[](double) { return 4.0; }}, nodes).value,
             WithinRel(fisher / 4, 1e-15));
  const ArctanFlow f(1.0, 0.6, ArctanPrefactor::MatchDiffusion);
  CHECK_THAT(riemannian_fisher(q, p, metric_from_flow(f), nodes).value,
             WithinRel(diffusion_fisher(q, p, f, nodes).value, 1e-8));
  CHECK_THROWS_AS(riemannian_fisher(q, p, RiemannianMetric{[](double x) { return x; }}, nodes),
                  NonPositiveMetric);
}

TEST_CASE("non-finite integrands are reported, not returned") {
  const StudentT q(0.0, 0.3, 5.0);
  const auto nodes = default_quadrature(q).nodes(q);
  const TestFunction bad{"bad", [](double) { return std::numeric_limits<double>::infinity(); },
                         [](double) { return 0.0; }};
  CHECK_THROWS_AS(stein_value(q, bad, nodes), BackendError);
}
