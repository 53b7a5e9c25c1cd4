#pragma once

// Realizations of E_q[h]: a fixed sample set (equal weights) or a
// deterministic quadrature of h(x) q(x) over [lo, hi].

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dsmflow/densities.hpp"
#include "dsmflow/error.hpp"
#include "dsmflow/flows.hpp"
#include "dsmflow/numeric.hpp"

namespace dsmflow {

/// Points and weights; E[h] is approximated by sum_i weight_i h(point_i).
struct WeightedNodes {
  std::vector<double> points;
  std::vector<double> weights;
  std::string info;

  std::size_t size() const { return points.size(); }
  double total_weight() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

/// Gauss-Legendre nodes and weights of the given order on [-1, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(std::size_t order) {
  std::vector<double> x(order), w(order);
  const std::size_t half = (order + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double z = std::cos(kPi * (static_cast<double>(i) + 0.75) / (static_cast<double>(order) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (std::size_t j = 0; j < order; ++j) {
        const double p3 = p2;
        p2 = p1;
        const double jj = static_cast<double>(j);
        p1 = ((2.0 * jj + 1.0) * z * p2 - jj * p3) / (jj + 1.0);
      }
      dp = static_cast<double>(order) * (z * p1 - p2) / (z * z - 1.0);
      const double step = p1 / dp;
      z -= step;
      if (std::abs(step) < 1e-16) break;
    }
    x[i] = -z;
    x[order - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    w[order - 1 - i] = w[i];
  }
  return {std::move(x), std::move(w)};
}

enum class QuadratureRule { GaussLegendreComposite, Trapezoid };

inline constexpr std::size_t kGaussLegendrePanelOrder = 16;

struct QuadratureSpec {
  double lo;
  double hi;
  std::size_t n_points = 2048;
  QuadratureRule rule = QuadratureRule::GaussLegendreComposite;
};

/// Plain (Lebesgue) nodes for integral_lo^hi f(x) dx.
inline WeightedNodes quadrature_nodes(const QuadratureSpec& spec) {
  if (!(spec.lo < spec.hi) || !std::isfinite(spec.lo) || !std::isfinite(spec.hi)) {
    throw InvalidParam("divergences", "quadrature requires finite lo < hi");
  }
  if (spec.n_points < 64) throw InvalidParam("divergences", "quadrature requires n_points >= 64");

  WeightedNodes out;
  if (spec.rule == QuadratureRule::Trapezoid) {
    const std::size_t n = spec.n_points;
    const double h = (spec.hi - spec.lo) / static_cast<double>(n - 1);
    out.points.reserve(n);
    out.weights.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      out.points.push_back(spec.lo + h * static_cast<double>(i));
      out.weights.push_back((i == 0 || i == n - 1) ? 0.5 * h : h);
    }
    return out;
  }

  const auto [gx, gw] = gauss_legendre(kGaussLegendrePanelOrder);
  const std::size_t panels =
      (spec.n_points + kGaussLegendrePanelOrder - 1) / kGaussLegendrePanelOrder;
  const double width = (spec.hi - spec.lo) / static_cast<double>(panels);
  out.points.reserve(panels * kGaussLegendrePanelOrder);
  out.weights.reserve(panels * kGaussLegendrePanelOrder);
  for (std::size_t p = 0; p < panels; ++p) {
    const double a = spec.lo + width * static_cast<double>(p);
    const double mid = a + 0.5 * width;
    for (std::size_t k = 0; k < gx.size(); ++k) {
      out.points.push_back(mid + 0.5 * width * gx[k]);
      out.weights.push_back(0.5 * width * gw[k]);
    }
  }
  return out;
}

struct MonteCarloSpec {
  SampleSet samples;
};

/// Equal-weight nodes over a sample set.
inline WeightedNodes sample_nodes(const SampleSet& samples) {
  if (samples.values.empty()) throw InvalidParam("divergences", "MonteCarlo needs samples");
  WeightedNodes out;
  out.points = samples.values;
  out.weights.assign(out.points.size(), 1.0 / static_cast<double>(out.points.size()));
  std::ostringstream os;
  os << "monte_carlo(n=" << samples.size() << ")";
  out.info = os.str();
  return out;
}

/// Largest probability mass of q a quadrature range may leave out.
inline constexpr double kMaxMissedMass = 1e-4;

/// E_q over the whole real line through x = center + width tan(u),
/// u in (-pi/2, pi/2). Nothing is truncated, so integration-by-parts
/// identities hold without boundary terms as long as the integrand decays.
template <DensityModel Q>
WeightedNodes whole_line_nodes(const Q& q, double center, double width, std::size_t n_points = 4096) {
  if (!(width > 0.0)) throw InvalidParam("divergences", "whole-line quadrature needs width > 0");
  const double half_pi = 0.5 * std::acos(-1.0);
  WeightedNodes u = quadrature_nodes({-half_pi, half_pi, n_points});
  WeightedNodes out;
  out.points.reserve(u.size());
  out.weights.reserve(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double t = std::tan(u.points[i]);
    const double x = center + width * t;
    out.points.push_back(x);
    out.weights.push_back(u.weights[i] * width * (1.0 + t * t) * std::exp(q.log_pdf(x)));
  }
  std::ostringstream os;
  os.precision(17);
  os << "whole_line(center=" << center << ", width=" << width << ", n=" << u.size() << ")";
  out.info = os.str();
  return out;
}

class ExpectationBackend {
public:
  static ExpectationBackend monte_carlo(SampleSet samples) {
    if (samples.values.empty()) throw InvalidParam("divergences", "MonteCarlo needs samples");
    return ExpectationBackend(MonteCarloSpec{std::move(samples)});
  }
  static ExpectationBackend quadrature(double lo, double hi, std::size_t n_points = 2048,
                                       QuadratureRule rule = QuadratureRule::GaussLegendreComposite) {
    QuadratureSpec spec{lo, hi, n_points, rule};
    (void)quadrature_nodes(spec);  // validates
    return ExpectationBackend(spec);
  }

  bool is_quadrature() const { return std::holds_alternative<QuadratureSpec>(spec_); }
  const QuadratureSpec* quadrature_spec() const { return std::get_if<QuadratureSpec>(&spec_); }
  const MonteCarloSpec* monte_carlo_spec() const { return std::get_if<MonteCarloSpec>(&spec_); }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    if (const auto* q = quadrature_spec()) {
      os << "quadrature(" << (q->rule == QuadratureRule::Trapezoid ? "trapezoid" : "gauss_legendre")
         << ", lo=" << q->lo << ", hi=" << q->hi << ", n=" << q->n_points << ")";
    } else {
      os << "monte_carlo(n=" << monte_carlo_spec()->samples.size() << ")";
    }
    return os.str();
  }

  /// Nodes whose weights already include q: E_q[h] ~ sum w_i h(x_i).
  template <DensityModel Q>
  WeightedNodes nodes(const Q& q) const {
    if (const auto* mc = monte_carlo_spec()) return sample_nodes(mc->samples);
    const QuadratureSpec& spec = *quadrature_spec();
    const double missed = q.cdf(spec.lo) + q.sf(spec.hi);
    if (!(missed <= kMaxMissedMass)) {
      std::ostringstream os;
      os << "quadrature range [" << spec.lo << ", " << spec.hi << "] misses " << missed
         << " of q's mass (limit " << kMaxMissedMass << ")";
      throw BackendError("divergences", os.str());
    }
    WeightedNodes out = quadrature_nodes(spec);
    for (std::size_t i = 0; i < out.size(); ++i) out.weights[i] *= std::exp(q.log_pdf(out.points[i]));
    out.info = describe();
    return out;
  }

private:
  explicit ExpectationBackend(std::variant<MonteCarloSpec, QuadratureSpec> spec)
      : spec_(std::move(spec)) {}

  std::variant<MonteCarloSpec, QuadratureSpec> spec_;
};

/// The default range for q = Student-t: loc +- 40 scale.
inline ExpectationBackend default_quadrature(const StudentT& q, std::size_t n_points = 2048) {
  return ExpectationBackend::quadrature(q.location() - 40.0 * q.scale(),
                                        q.location() + 40.0 * q.scale(), n_points);
}

/// E_{q_Y}[h] for Y = T(X), X ~ q: the same weights at the mapped points.
template <FlowModel F>
WeightedNodes map_through(const WeightedNodes& nodes, const F& flow) {
  WeightedNodes out;
  out.weights = nodes.weights;
  out.points.reserve(nodes.size());
  for (double x : nodes.points) out.points.push_back(flow.forward(x));
  out.info = nodes.info + " mapped through flow";
  return out;
}

}  // namespace dsmflow
