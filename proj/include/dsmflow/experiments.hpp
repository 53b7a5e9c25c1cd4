#pragma once

// Landscapes of the score-matching objectives for a Student-t location model
// p_theta = StudentT(theta, scale, dof) against fixed data q.
//
//   sm            E_q[1/2 s_p^2 + s_p']
//   dsm_manual    DSM with the arctan flow centred at theta, m = 1 + (x - theta)^2 / b
//   dsm_gaussian  DSM with the Gaussian flow Phi^{-1}(F_theta(x))
//
// Both DSM flows move with theta, so the plotted curve is not the diffusion
// Fisher divergence plus a constant; its theta-derivative is what the
// fast-convergence region is read from.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "dsmflow/densities.hpp"
#include "dsmflow/divergences.hpp"
#include "dsmflow/error.hpp"
#include "dsmflow/expectation.hpp"
#include "dsmflow/flows.hpp"
#include "dsmflow/pushforward.hpp"

namespace dsmflow {

enum class Objective { SM, DSMManual, DSMGaussian };

inline std::string_view objective_name(Objective o) {
  switch (o) {
    case Objective::SM: return "sm";
    case Objective::DSMManual: return "dsm_manual";
    case Objective::DSMGaussian: return "dsm_gaussian";
  }
  return "?";
}

inline Objective parse_objective(std::string_view name) {
  if (name == "sm") return Objective::SM;
  if (name == "dsm_manual") return Objective::DSMManual;
  if (name == "dsm_gaussian") return Objective::DSMGaussian;
  throw InvalidParam("experiments",
                     "unknown objective '" + std::string(name) + "' (sm, dsm_manual, dsm_gaussian)");
}

/// The Student-t location model and the manual flow's shape.
struct ModelSpec {
  double scale = 0.3;
  double dof = 5.0;
  double manual_b = 0.6;
};

/// Loss of `objective` for the model located at model_theta with any flow
/// centred at flow_theta. The two coincide on the plotted landscape; they
/// differ only for plug-in (stop-gradient) derivatives.
inline double objective_loss(Objective objective, double model_theta, double flow_theta,
                             const WeightedNodes& nodes, const ModelSpec& model) {
  const StudentT p(model_theta, model.scale, model.dof);
  switch (objective) {
    case Objective::SM:
      return score_matching_loss(p, nodes).value;
    case Objective::DSMManual:
      return dsm_loss(p, ArctanFlow(flow_theta, model.manual_b, ArctanPrefactor::MatchDiffusion),
                      nodes).value;
    case Objective::DSMGaussian:
      return dsm_loss(p, GaussianFlow<StudentT>(StudentT(flow_theta, model.scale, model.dof)),
                      nodes).value;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

inline double objective_loss(Objective objective, double theta, const WeightedNodes& nodes,
                             const ModelSpec& model) {
  return objective_loss(objective, theta, theta, nodes, model);
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepSpec {
  double theta_lo = -10.0;
  double theta_hi = 10.0;
  double step = 0.01;
  std::vector<Objective> objectives{Objective::SM, Objective::DSMManual, Objective::DSMGaussian};
  ModelSpec model{};
};

/// theta_i = lo + i step for i = 0 .. floor((hi - lo) / step); lo == hi is a
/// single-point grid.
inline std::vector<double> theta_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) throw InvalidParam("experiments", "step must be > 0");
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw InvalidParam("experiments", "theta range requires finite lo <= hi");
  }
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) grid[i] = lo + step * static_cast<double>(i);
  return grid;
}

struct SweepRow {
  double theta;
  std::vector<double> loss;                 // one per objective
  std::vector<std::optional<double>> grad;  // absent on single-point grids
};

struct SweepTable {
  std::vector<Objective> objectives;
  std::vector<SweepRow> rows;

  std::size_t column(Objective o) const {
    const auto it = std::find(objectives.begin(), objectives.end(), o);
    if (it == objectives.end()) {
      throw InvalidParam("experiments",
                         "objective '" + std::string(objective_name(o)) + "' not in the sweep");
    }
    return static_cast<std::size_t>(it - objectives.begin());
  }
};

/// d loss / d theta over the grid: central differences inside, one-sided at
/// the two ends.
inline void fill_gradients(SweepTable& table) {
  const std::size_t n = table.rows.size();
  for (auto& row : table.rows) row.grad.assign(table.objectives.size(), std::nullopt);
  if (n < 2) return;
  for (std::size_t k = 0; k < table.objectives.size(); ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t a = i == 0 ? 0 : i - 1;
      const std::size_t b = i + 1 == n ? n - 1 : i + 1;
      table.rows[i].grad[k] = (table.rows[b].loss[k] - table.rows[a].loss[k]) /
                              (table.rows[b].theta - table.rows[a].theta);
    }
  }
}

inline SweepTable run_sweep(const SweepSpec& spec, const WeightedNodes& nodes) {
  if (spec.objectives.empty()) throw InvalidParam("experiments", "sweep needs an objective");
  SweepTable table;
  table.objectives = spec.objectives;
  for (double theta : theta_grid(spec.theta_lo, spec.theta_hi, spec.step)) {
    SweepRow row{theta, {}, {}};
    row.loss.reserve(spec.objectives.size());
    for (Objective o : spec.objectives) row.loss.push_back(objective_loss(o, theta, nodes, spec.model));
    table.rows.push_back(std::move(row));
  }
  fill_gradients(table);
  return table;
}

/// Sweep against a known density q through the given backend.
inline SweepTable run_sweep(const SweepSpec& spec, const StudentT& q, const ExpectationBackend& e) {
  return run_sweep(spec, e.nodes(q));
}

/// Sweep against a data set (Monte Carlo average over the samples).
inline SweepTable run_sweep(const SweepSpec& spec, const SampleSet& data) {
  return run_sweep(spec, sample_nodes(data));
}

inline double argmin_theta(const SweepTable& table, Objective o) {
  const std::size_t k = table.column(o);
  const auto it = std::min_element(table.rows.begin(), table.rows.end(),
                                   [k](const SweepRow& a, const SweepRow& b) { return a.loss[k] < b.loss[k]; });
  return it->theta;
}

/// Strict interior local minima (kind < 0) or maxima (kind > 0) of the loss
/// column restricted to theta in [lo, hi].
inline std::vector<double> local_extrema(const SweepTable& table, Objective o, int kind,
                                         double lo = -std::numeric_limits<double>::infinity(),
                                         double hi = std::numeric_limits<double>::infinity()) {
  const std::size_t k = table.column(o);
  std::vector<double> out;
  for (std::size_t i = 1; i + 1 < table.rows.size(); ++i) {
    const double t = table.rows[i].theta;
    if (t < lo || t > hi) continue;
    if (table.rows[i - 1].theta < lo || table.rows[i + 1].theta > hi) continue;
    const double l = table.rows[i].loss[k];
    const double a = table.rows[i - 1].loss[k];
    const double b = table.rows[i + 1].loss[k];
    if (kind < 0 ? (l < a && l < b) : (l > a && l > b)) out.push_back(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fast-convergence regions

struct RegionReport {
  Objective objective;
  double threshold;
  std::vector<std::pair<double, double>> intervals;
  double total_width = 0.0;

  bool empty() const { return intervals.empty(); }
};

/// Intervals where |d loss / d theta| >= threshold; endpoints interpolated
/// linearly in |grad| between neighbouring grid points.
inline RegionReport region_width(const SweepTable& table, Objective o, double threshold) {
  const std::size_t k = table.column(o);
  RegionReport report{o, threshold, {}, 0.0};

  std::vector<double> theta;
  std::vector<double> mag;
  for (const auto& row : table.rows) {
    if (!row.grad[k]) continue;
    theta.push_back(row.theta);
    mag.push_back(std::abs(*row.grad[k]));
  }
  auto crossing = [&](std::size_t out, std::size_t in) {
    const double denom = mag[in] - mag[out];
    const double frac = denom > 0.0 ? (threshold - mag[out]) / denom : 0.0;
    return theta[out] + std::clamp(frac, 0.0, 1.0) * (theta[in] - theta[out]);
  };

  const std::size_t n = theta.size();
  std::size_t i = 0;
  while (i < n) {
    if (!(mag[i] >= threshold)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && mag[j + 1] >= threshold) ++j;
    const double lo = i == 0 ? theta[i] : crossing(i - 1, i);
    const double hi = j + 1 == n ? theta[j] : crossing(j + 1, j);
    report.intervals.emplace_back(lo, hi);
    report.total_width += hi - lo;
    i = j + 1;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Robustness across degrees of freedom

struct RobustnessRow {
  double dof;
  double manual_argmin;
  double gaussian_argmin;
  double manual_width;
  double gaussian_width;
};

/// For each dof, q = StudentT(0, scale, dof) and p_theta share that dof. The
/// manual flow keeps b fixed; the Gaussian flow follows the model's CDF.
/// `backend_for` maps q to the expectation backend used for that dof.
template <class BackendFor>
std::vector<RobustnessRow> robustness_sweep(const std::vector<double>& dofs, const SweepSpec& spec,
                                            BackendFor&& backend_for, double threshold = 1.0) {
  std::vector<RobustnessRow> out;
  for (double dof : dofs) {
    if (!(dof > 2.0)) throw InvalidParam("experiments", "robustness sweep requires dof > 2");
    SweepSpec s = spec;
    s.model.dof = dof;
    s.objectives = {Objective::DSMManual, Objective::DSMGaussian};
    const StudentT q(0.0, s.model.scale, dof);
    const ExpectationBackend e = backend_for(q);
    const SweepTable table = run_sweep(s, q, e);
    out.push_back({dof, argmin_theta(table, Objective::DSMManual),
                   argmin_theta(table, Objective::DSMGaussian),
                   region_width(table, Objective::DSMManual, threshold).total_width,
                   region_width(table, Objective::DSMGaussian, threshold).total_width});
  }
  return out;
}

inline std::vector<RobustnessRow> robustness_sweep(const std::vector<double>& dofs,
                                                   const SweepSpec& spec) {
  return robustness_sweep(dofs, spec, [](const StudentT& q) { return default_quadrature(q); });
}

// ---------------------------------------------------------------------------
// Transformed densities under the arctan flow

struct TransformedDensityRow {
  double y;
  double log_p_y;
  double log_q_y;
};

/// Densities of Y = T(X) for p = StudentT(theta, scale, dof) and
/// q = StudentT(0, scale, dof) under the arctan flow centred at theta.
struct TransformedDensitySpec {
  double theta = -2.5;
  double b = 0.6;
  ArctanPrefactor mode = ArctanPrefactor::MatchAppendixD;
  double scale = 0.3;
  double dof = 5.0;
};

inline auto transformed_pair(const TransformedDensitySpec& spec) {
  const ArctanFlow flow(spec.theta, spec.b, spec.mode);
  return std::pair{pushforward(StudentT(spec.theta, spec.scale, spec.dof), flow),
                   pushforward(StudentT(0.0, spec.scale, spec.dof), flow)};
}

inline std::vector<TransformedDensityRow> transformed_density_table(
    const TransformedDensitySpec& spec, const std::vector<double>& grid) {
  const auto [p_y, q_y] = transformed_pair(spec);
  std::vector<TransformedDensityRow> rows;
  rows.reserve(grid.size());
  for (double y : grid) rows.push_back({y, p_y.log_pdf(y), q_y.log_pdf(y)});
  return rows;
}

/// integral of exp(log_pdf) over an open interval by composite Gauss-Legendre.
template <DensityModel D>
double integrate_pdf(const D& d, Interval range, std::size_t n_points = 4096) {
  const WeightedNodes nodes = quadrature_nodes({range.lo, range.hi, n_points});
  double total = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    total += nodes.weights[i] * std::exp(d.log_pdf(nodes.points[i]));
  }
  return total;
}

// ---------------------------------------------------------------------------
// Gradient-descent estimation of the location

/// Full: differentiate the plotted landscape (flow moves with theta).
/// PlugIn: freeze the flow at the current theta and differentiate through the
/// model location only.
enum class GradientMode { Full, PlugIn };

struct EstimationStep {
  std::size_t index;
  double theta;
  double loss;
  double grad;
};

struct EstimationTrace {
  std::vector<EstimationStep> iterations;
  double final_theta = 0.0;
  bool converged = false;
  bool diverged = false;
};

struct EstimationSpec {
  Objective objective = Objective::DSMGaussian;
  double theta_init = 0.0;
  double lr = 0.05;
  std::size_t max_iters = 500;
  GradientMode mode = GradientMode::Full;
  double fd_step = 1e-4;
  double grad_tolerance = 1e-4;
  double divergence_bound = 1e3;
  ModelSpec model{};
};

inline EstimationTrace estimate_theta(const WeightedNodes& nodes, const EstimationSpec& spec) {
  if (!(spec.lr > 0.0)) throw InvalidParam("experiments", "learning rate must be > 0");
  if (spec.max_iters < 1) throw InvalidParam("experiments", "max_iters must be >= 1");

  EstimationTrace trace;
  double theta = spec.theta_init;
  const double h = spec.fd_step;
  for (std::size_t it = 0; it < spec.max_iters; ++it) {
    const double flow_plus = spec.mode == GradientMode::Full ? theta + h : theta;
    const double flow_minus = spec.mode == GradientMode::Full ? theta - h : theta;
    const double grad =
        (objective_loss(spec.objective, theta + h, flow_plus, nodes, spec.model) -
         objective_loss(spec.objective, theta - h, flow_minus, nodes, spec.model)) /
        (2.0 * h);
    const double loss = objective_loss(spec.objective, theta, nodes, spec.model);
    trace.iterations.push_back({it, theta, loss, grad});
    if (std::abs(grad) < spec.grad_tolerance) {
      trace.converged = true;
      break;
    }
    theta -= spec.lr * grad;
    if (!(std::abs(theta) <= spec.divergence_bound)) {
      trace.diverged = true;
      break;
    }
  }
  trace.final_theta = trace.converged ? trace.iterations.back().theta : theta;
  return trace;
}

inline EstimationTrace estimate_theta(const SampleSet& data, const EstimationSpec& spec) {
  return estimate_theta(sample_nodes(data), spec);
}

}  // namespace dsmflow
