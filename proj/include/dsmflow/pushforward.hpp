#pragma once

#include <cmath>
#include <utility>

#include "dsmflow/densities.hpp"
#include "dsmflow/flows.hpp"

namespace dsmflow {

/// Density of Y = T(X) for X ~ base.
///
///   log p_Y(y) = log p_X(x) + log m(x)
///   s_Y(y)     = m(x) s_X(x) + m'(x)
///
/// with x = T^{-1}(y) and m = 1 / T'. Points outside T's image raise
/// OutOfImage from the flow's inverse.
template <DensityModel Base, FlowModel Flow>
class Pushforward {
public:
  Pushforward(Base base, Flow flow) : base_(std::move(base)), flow_(std::move(flow)) {}

  const Base& base() const { return base_; }
  const Flow& flow() const { return flow_; }

  double log_pdf(double y) const {
    const double x = flow_.inverse(y);
    return base_.log_pdf(x) + std::log(diffusion_matrix(flow_, x));
  }

  double score(double y) const {
    const double x = flow_.inverse(y);
    const DiffusionValue d = diffusion(flow_, x);
    return d.m * base_.score(x) + d.dm;
  }

  double cdf(double y) const {
    const Interval img = flow_.image();
    if (y <= img.lo) return 0.0;
    if (y >= img.hi) return 1.0;
    return base_.cdf(flow_.inverse(y));
  }

  double sf(double y) const {
    const Interval img = flow_.image();
    if (y <= img.lo) return 1.0;
    if (y >= img.hi) return 0.0;
    return base_.sf(flow_.inverse(y));
  }

  double quantile(double u) const { return flow_.forward(base_.quantile(u)); }
  double isf(double u) const { return flow_.forward(base_.isf(u)); }

private:
  Base base_;
  Flow flow_;
};

template <DensityModel Base, FlowModel Flow>
Pushforward<Base, Flow> pushforward(Base base, Flow flow) {
  return Pushforward<Base, Flow>(std::move(base), std::move(flow));
}

}  // namespace dsmflow
