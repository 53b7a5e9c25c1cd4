#pragma once

// One-dimensional densities with exact scores, CDFs and quantiles.
//
// Every density model exposes log_pdf, score (d/dx log_pdf), cdf, sf (upper
// tail), quantile and isf (inverse upper tail). The tail pair lets flows built
// on CDF composition stay accurate far from the centre. score_derivative is
// optional; the free function falls back to a central difference.

#include <concepts>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "dsmflow/error.hpp"
#include "dsmflow/numeric.hpp"
#include "dsmflow/rng.hpp"
#include "dsmflow/special.hpp"

namespace dsmflow {

template <class D>
concept DensityModel = requires(const D& d, double x) {
  { d.log_pdf(x) } -> std::convertible_to<double>;
  { d.score(x) } -> std::convertible_to<double>;
  { d.cdf(x) } -> std::convertible_to<double>;
  { d.sf(x) } -> std::convertible_to<double>;
  { d.quantile(x) } -> std::convertible_to<double>;
  { d.isf(x) } -> std::convertible_to<double>;
};

namespace detail {

inline void require_unit_open(double u, const char* what) {
  if (!(u > 0.0 && u < 1.0)) {
    std::ostringstream os;
    os << what << " requires u in (0, 1), got " << u;
    throw DomainError("densities", os.str());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------

class Gaussian {
public:
  Gaussian(double mean, double std) : mean_(mean), std_(std) {
    if (!(std > 0.0) || !std::isfinite(std) || !std::isfinite(mean)) {
      throw InvalidParam("densities", "Gaussian requires finite mean and std > 0");
    }
  }

  double mean() const { return mean_; }
  double std() const { return std_; }

  double log_pdf(double x) const {
    return special::normal_log_pdf((x - mean_) / std_) - std::log(std_);
  }
  double pdf(double x) const { return std::exp(log_pdf(x)); }
  double score(double x) const { return -(x - mean_) / (std_ * std_); }
  double score_derivative(double) const { return -1.0 / (std_ * std_); }
  double cdf(double x) const { return special::normal_cdf((x - mean_) / std_); }
  double sf(double x) const { return special::normal_sf((x - mean_) / std_); }

  double quantile(double u) const {
    detail::require_unit_open(u, "Gaussian quantile");
    return mean_ + std_ * special::normal_quantile(u);
  }
  double isf(double u) const {
    detail::require_unit_open(u, "Gaussian inverse survival");
    return mean_ + std_ * special::normal_isf(u);
  }

private:
  double mean_;
  double std_;
};

// ---------------------------------------------------------------------------

/// Location-scale Student-t.
class StudentT {
public:
  StudentT(double location, double scale, double dof)
      : location_(location), scale_(scale), dof_(dof) {
    if (!(scale > 0.0) || !(dof > 0.0) || !std::isfinite(location) || !std::isfinite(scale) ||
        !std::isfinite(dof)) {
      throw InvalidParam("densities", "StudentT requires finite location, scale > 0, dof > 0");
    }
    log_norm_ = special::student_t_log_norm(dof_) - std::log(scale_);
  }

  double location() const { return location_; }
  double scale() const { return scale_; }
  double dof() const { return dof_; }

  double log_pdf(double x) const {
    const double t = (x - location_) / scale_;
    return log_norm_ - 0.5 * (dof_ + 1.0) * std::log1p(t * t / dof_);
  }
  double pdf(double x) const { return std::exp(log_pdf(x)); }

  // s(x) = -(nu + 1)(x - loc) / (nu scale^2 + (x - loc)^2)
  double score(double x) const {
    const double d = x - location_;
    return -(dof_ + 1.0) * d / (dof_ * scale_ * scale_ + d * d);
  }
  double score_derivative(double x) const {
    const double d = x - location_;
    const double a = dof_ * scale_ * scale_;
    const double denom = a + d * d;
    return -(dof_ + 1.0) * (a - d * d) / (denom * denom);
  }

  double cdf(double x) const { return special::student_t_cdf((x - location_) / scale_, dof_); }
  double sf(double x) const { return special::student_t_cdf((location_ - x) / scale_, dof_); }

  double quantile(double u) const {
    detail::require_unit_open(u, "StudentT quantile");
    if (u == 0.5) return location_;
    if (u < 0.5) return location_ + scale_ * lower_standard_quantile(u);
    return location_ - scale_ * lower_standard_quantile(1.0 - u);
  }
  double isf(double u) const {
    detail::require_unit_open(u, "StudentT inverse survival");
    if (u == 0.5) return location_;
    if (u < 0.5) return location_ - scale_ * lower_standard_quantile(u);
    return location_ + scale_ * lower_standard_quantile(1.0 - u);
  }

private:
  // Standardized t < 0 with P(T <= t) = u, 0 < u < 0.5. Newton on
  // log P(T <= t) - log u, bracketed by [lo, 0].
  double lower_standard_quantile(double u) const {
    const double nu = dof_;
    const double log_u = std::log(u);
    const double log_c = special::student_t_log_norm(nu);
    auto g = [&](double t) { return std::log(special::student_t_tail(t, nu)) - log_u; };
    auto dg = [&](double t) {
      const double log_pdf = log_c - 0.5 * (nu + 1.0) * std::log1p(t * t / nu);
      return std::exp(log_pdf - std::log(special::student_t_tail(t, nu)));
    };

    // Cornish-Fisher near the centre, power-law tail asymptote far out.
    const double z = special::normal_quantile(u);
    const double cornish = z + (z * z * z + z) / (4.0 * nu) +
                           (5.0 * std::pow(z, 5) + 16.0 * z * z * z + 3.0 * z) / (96.0 * nu * nu);
    const double asymptote =
        -std::exp((log_c + 0.5 * (nu - 1.0) * std::log(nu) - log_u) / nu);
    double guess = std::abs(g(cornish)) < std::abs(g(asymptote)) ? cornish : asymptote;
    if (!(guess < 0.0) || !std::isfinite(guess)) guess = -1.0;

    double lo = guess;
    while (g(lo) >= 0.0) lo *= 2.0;
    return solve_increasing(g, dg, guess, lo, 0.0);
  }

  double location_;
  double scale_;
  double dof_;
  double log_norm_;
};

// ---------------------------------------------------------------------------
// Free-function surface over any DensityModel.

template <DensityModel D>
double log_pdf(const D& d, double x) {
  return d.log_pdf(x);
}

template <DensityModel D>
double pdf(const D& d, double x) {
  return std::exp(d.log_pdf(x));
}

template <DensityModel D>
double score(const D& d, double x) {
  return d.score(x);
}

/// ds/dx, analytic when the model provides it.
template <DensityModel D>
double score_derivative(const D& d, double x) {
  if constexpr (requires { { d.score_derivative(x) } -> std::convertible_to<double>; }) {
    return d.score_derivative(x);
  } else {
    return central_difference([&](double v) { return d.score(v); }, x);
  }
}

template <DensityModel D>
double cdf(const D& d, double x) {
  return d.cdf(x);
}

template <DensityModel D>
double quantile(const D& d, double u) {
  detail::require_unit_open(u, "quantile");
  return d.quantile(u);
}

// ---------------------------------------------------------------------------

/// A fixed set of draws; MonteCarlo backends average over it with equal weight.
struct SampleSet {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

/// Inverse-CDF sampling from the versioned uniform stream.
template <DensityModel D>
SampleSet sample(const D& d, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw InvalidParam("densities", "sample requires n >= 1");
  UniformStream stream(seed);
  SampleSet out;
  out.values.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.values.push_back(d.quantile(stream.next()));
  return out;
}

// ---------------------------------------------------------------------------

/// Runtime choice between the closed-form families, for configs and the CLI.
class AnyDensity {
public:
  using Storage = std::variant<StudentT, Gaussian>;

  AnyDensity(StudentT d) : storage_(d) {}
  AnyDensity(Gaussian d) : storage_(d) {}

  const Storage& storage() const { return storage_; }

  double log_pdf(double x) const { return visit([x](const auto& d) { return d.log_pdf(x); }); }
  double score(double x) const { return visit([x](const auto& d) { return d.score(x); }); }
  double score_derivative(double x) const {
    return visit([x](const auto& d) { return d.score_derivative(x); });
  }
  double cdf(double x) const { return visit([x](const auto& d) { return d.cdf(x); }); }
  double sf(double x) const { return visit([x](const auto& d) { return d.sf(x); }); }
  double quantile(double u) const { return visit([u](const auto& d) { return d.quantile(u); }); }
  double isf(double u) const { return visit([u](const auto& d) { return d.isf(u); }); }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    if (const auto* t = std::get_if<StudentT>(&storage_)) {
      os << "student_t(loc=" << t->location() << ", scale=" << t->scale() << ", dof=" << t->dof()
         << ")";
    } else {
      const auto& g = std::get<Gaussian>(storage_);
      os << "gaussian(mean=" << g.mean() << ", std=" << g.std() << ")";
    }
    return os.str();
  }

private:
  template <class F>
  double visit(F&& f) const {
    return std::visit(std::forward<F>(f), storage_);
  }

  Storage storage_;
};

}  // namespace dsmflow
