#include <catch_amalgamated.hpp>

#include <array>

#include "dsmflow/ode_dsm.hpp"
#include "support.hpp"

using namespace dsmflow;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const StudentT kQ(0.0, 0.3, 5.0);
const StudentT kP(0.6, 0.3, 5.0);

WeightedNodes gaussian_nodes(const Gaussian& q) {
  return ExpectationBackend::quadrature(-40, 40, 4096).nodes(q);
}

}  // namespace

TEST_CASE("drift registry and derivatives") {
  for (const OdeDrift& d : {drifts::linear(0.7), drifts::tanh(), drifts::cubic_damped()}) {
    for (double x = -3.0; x <= 3.0; x += 0.25) {
      const double fd = support::derivative(d.g, x, 1e-3);
      const double fd2 = support::derivative(d.g_prime, x, 1e-3);
      INFO(d.name << " x=" << x);
      CHECK_THAT(d.g_prime(x), WithinAbs(fd, 1e-5 * std::max(1.0, std::abs(fd))));
      CHECK_THAT(d.second(x), WithinAbs(fd2, 1e-5 * std::max(1.0, std::abs(fd2))));
    }
  }
  CHECK(drifts::by_name("linear", 2.0).g(3.0) == 6.0);
  CHECK(drifts::by_name("cubic_damped").g(2.0) == 2.0 - 0.8);
  CHECK_THROWS_AS(drifts::by_name("quartic"), InvalidParam);
}

TEST_CASE("instantaneous change: closed forms") {
  const auto nodes = default_quadrature(kQ).nodes(kQ);
  CHECK(instantaneous_change(kQ, kQ, drifts::tanh(), nodes) == 0.0);
  // g' = 1 gives -2 F
  CHECK_THAT(instantaneous_change(kQ, kP, drifts::linear(1.0), nodes),
             WithinRel(-2.0 * fisher_divergence(kQ, kP, nodes).value, 1e-14));

  const Gaussian q(0, 1), p(1, 1);
  CHECK_THAT(instantaneous_change(q, p, drifts::linear(1.0), gaussian_nodes(q)), WithinRel(-1.0, 1e-12));
}

TEST_CASE("instantaneous change is negative for increasing drifts") {
  const auto nodes = default_quadrature(kQ).nodes(kQ);
  for (double loc : {-2.0, -0.1, 0.4, 3.0}) {
    const StudentT p(loc, 0.3, 5.0);
    CHECK(instantaneous_change(kQ, p, drifts::tanh(), nodes) < 0.0);
    CHECK(instantaneous_change(kQ, p, drifts::linear(0.3), nodes) < 0.0);
  }
}

TEST_CASE("symmetric pair with an odd drift matches direct quadrature") {
  const StudentT q(0.0, 0.3, 5.0), p(0.0, 0.5, 5.0);
  const auto nodes = default_quadrature(q).nodes(q);
  const OdeDrift d = drifts::cubic_damped();
  double direct = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double x = nodes.points[i];
    const double delta = p.score(x) - q.score(x);
    direct -= nodes.weights[i] * delta * delta * (1.0 - 0.3 * x * x);
  }
  CHECK_THAT(instantaneous_change(q, p, d, nodes), WithinRel(direct, 1e-10));
}

TEST_CASE("Euler step reproduces the rate for Gaussians") {
  const Gaussian q(0, 1), p(1, 1);
  const EulerCheck c = euler_pushforward_check(q, p, drifts::linear(1.0), 1e-5, gaussian_nodes(q));
  CHECK_THAT(c.analytic, WithinRel(-1.0, 1e-12));
  CHECK_THAT(c.finite_diff, WithinRel(-1.0, 1e-3));
}

TEST_CASE("Euler step reproduces the rate for Student-t pairs at first order") {
  const auto nodes = default_quadrature(kQ).nodes(kQ);
  for (const OdeDrift& d : {drifts::linear(1.0), drifts::tanh(), drifts::cubic_damped()}) {
    const std::array<double, 3> deltas{1e-3, 1e-4, 1e-5};
    std::array<double, 3> gaps{};
    for (std::size_t i = 0; i < 3; ++i) gaps[i] = euler_pushforward_check(kQ, kP, d, deltas[i], nodes).relative_gap();
    INFO(d.name);
    CHECK(gaps[2] < 1e-3);
    CHECK(gaps[0] > gaps[1]);
    CHECK(gaps[1] > gaps[2]);
    CHECK_THAT(convergence_order(deltas, gaps), WithinAbs(1.0, 0.1));
  }
}

TEST_CASE("Richardson extrapolation recovers the rate") {
  const auto nodes = default_quadrature(kQ).nodes(kQ);
  for (const OdeDrift& d : {drifts::linear(0.5), drifts::tanh(), drifts::cubic_damped()}) {
    INFO(d.name);
    CHECK_THAT(richardson_rate(kQ, kP, d, 1e-3, nodes),
               WithinRel(instantaneous_change(kQ, kP, d, nodes), 1e-4));
  }
}

TEST_CASE("Euler check guards its step size") {
  const auto nodes = default_quadrature(kQ).nodes(kQ);
  // max |g'| of the cubic on +-12 is about 42
  CHECK_THROWS_AS(euler_pushforward_check(kQ, kP, drifts::cubic_damped(), 0.05, nodes), NonInvertible);
  CHECK_THROWS_AS(euler_pushforward_check(kQ, kP, drifts::tanh(), 0.0, nodes), InvalidParam);
}

TEST_CASE("convergence order of an exact power law") {
  const std::array<double, 3> d{1e-2, 1e-3, 1e-4};
  const std::array<double, 3> g{3e-4, 3e-6, 3e-8};
  CHECK_THAT(convergence_order(d, g), WithinAbs(2.0, 1e-12));
  CHECK_THROWS_AS(convergence_order(std::span<const double>(d.data(), 1), std::span<const double>(g.data(), 1)),
                  InvalidParam);
}
