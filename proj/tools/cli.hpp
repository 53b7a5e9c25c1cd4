#pragma once

// dsmflow command-line front end. Every subcommand resolves its parameters
// from built-in defaults, then an optional --config file, then flags, and
// echoes the result as the first comment line of its output so a run can be
// replayed with `--config <output file>`.
//
// Exit codes: 0 success, 1 usage or parameter error, 2 numerical failure.

#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsmflow/dsmflow.hpp"
#include "dsmflow/verify.hpp"

namespace dsmflow::cli {

using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kConfigPrefix = "# config: ";

struct Range {
  double lo, hi, step;
};

/// "lo:hi:step"
inline Range parse_range(const std::string& s) {
  const auto parts = io::split(s, ':');
  if (parts.size() != 3) throw UsageError("range '" + s + "' is not lo:hi:step");
  try {
    return {io::parse_double(parts[0]), io::parse_double(parts[1]), io::parse_double(parts[2])};
  } catch (const Error&) {
    throw UsageError("range '" + s + "' is not lo:hi:step");
  }
}

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& f : io::split(s, ',')) {
    try {
      out.push_back(io::parse_double(f));
    } catch (const Error&) {
      throw UsageError("'" + s + "' is not a comma-separated list of numbers");
    }
  }
  if (out.empty()) throw UsageError("empty list");
  return out;
}

inline std::vector<Objective> parse_objectives(const std::string& s) {
  std::vector<Objective> out;
  for (const auto& f : io::split(s, ',')) {
    try {
      out.push_back(parse_objective(f));
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  if (out.empty()) throw UsageError("no objectives given");
  return out;
}

/// A JSON file, or any text file holding a "# config: {...}" line.
inline json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.rfind(kConfigPrefix, 0) == 0) {
      return json::parse(line.substr(std::string(kConfigPrefix).size()), nullptr, false);
    }
  }
  json doc = json::parse(text, nullptr, false);
  // region-width output nests its echo
  if (doc.is_object() && doc.contains("config") && doc["config"].is_object()) return doc["config"];
  return doc;
}

// ---------------------------------------------------------------------------
// Parameter resolution

/// One subcommand's parameters: defaults (which fix each key's type), the raw
/// flag strings CLI11 fills in, and the resolved JSON.
class Params {
public:
  Params(std::string command, json defaults) : command_(std::move(command)), values_(std::move(defaults)) {}

  void bind(CLI::App& app, std::map<std::string, std::string> help) {
    app.add_option("--config", config_path_, "JSON config, or an output file with a '# config:' line");
    for (auto it = values_.begin(); it != values_.end(); ++it) {
      std::string flag = "--" + it.key();
      for (char& c : flag) c = c == '_' ? '-' : c;
      app.add_option(flag, raw_[it.key()], help[it.key()] + " (default " + it.value().dump() + ")");
    }
  }

  void resolve(CLI::App& app) {
    if (!config_path_.empty()) {
      const json file = load_config_file(config_path_);
      if (file.is_discarded() || !file.is_object()) {
        throw UsageError("config '" + config_path_ + "' is not a JSON object");
      }
      for (auto it = file.begin(); it != file.end(); ++it) {
        if (it.key() == "command") {
          if (it.value() != command_) {
            throw UsageError("config is for '" + it.value().dump() + "', not '" + command_ + "'");
          }
          continue;
        }
        if (!values_.contains(it.key())) throw UsageError("unknown config key '" + it.key() + "'");
        values_[it.key()] = coerce(it.key(), it.value());
      }
    }
    for (auto& [key, raw] : raw_) {
      std::string flag = "--" + key;
      for (char& c : flag) c = c == '_' ? '-' : c;
      if (app.count(flag) > 0) values_[key] = from_string(key, raw);
    }
  }

  double number(const std::string& key) const { return values_.at(key).get<double>(); }
  std::uint64_t integer(const std::string& key) const { return values_.at(key).get<std::uint64_t>(); }
  std::string text(const std::string& key) const { return values_.at(key).get<std::string>(); }

  /// Resolved config with the command name, as echoed into outputs.
  json echo() const {
    json out = values_;
    out["command"] = command_;
    return out;
  }

private:
  json coerce(const std::string& key, const json& v) const {
    const json& d = values_.at(key);
    if (d.is_number_unsigned()) {
      if (v.is_number_unsigned()) return v;
    } else if (d.is_number()) {
      if (v.is_number()) return v.get<double>();
    } else if (d.is_string()) {
      if (v.is_string()) return v;
    }
    throw UsageError("config key '" + key + "' expects " + std::string(d.type_name()));
  }

  json from_string(const std::string& key, const std::string& s) const {
    const json& d = values_.at(key);
    if (d.is_string()) return s;
    try {
      if (d.is_number_unsigned()) {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used);
        if (used != s.size() || s.front() == '-') throw std::invalid_argument(s);
        return static_cast<std::uint64_t>(v);
      }
      return io::parse_double(s);
    } catch (const std::exception&) {
      throw UsageError("--" + key + " expects a number, got '" + s + "'");
    }
  }

  std::string command_;
  json values_;
  std::string config_path_;
  std::map<std::string, std::string> raw_;
};

// ---------------------------------------------------------------------------
// Shared pieces

inline ModelSpec model_from(const Params& p) {
  return {p.number("scale"), p.number("dof"), p.number("b")};
}

inline SampleSet load_or_draw(const Params& p) {
  const std::string path = p.text("data");
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open data file '" + path + "'");
    return io::read_samples(in).samples;
  }
  return sample(StudentT(0.0, p.number("scale"), p.number("dof")),
                static_cast<std::size_t>(p.integer("n_samples")), p.integer("seed"));
}

/// Nodes for the data q = StudentT(0, scale, dof) under the chosen backend.
inline WeightedNodes data_nodes(const Params& p, std::string& describe) {
  const std::string backend = p.text("backend");
  if (backend == "quadrature") {
    const StudentT q(0.0, p.number("scale"), p.number("dof"));
    const auto e = default_quadrature(q, static_cast<std::size_t>(p.integer("quad_points")));
    describe = e.describe();
    return e.nodes(q);
  }
  if (backend == "mc") {
    const auto e = ExpectationBackend::monte_carlo(load_or_draw(p));
    describe = e.describe();
    return sample_nodes(e.monte_carlo_spec()->samples);
  }
  throw UsageError("--backend must be quadrature or mc, got '" + backend + "'");
}

inline json data_defaults() {
  return {{"backend", "quadrature"}, {"seed", 42u},      {"n_samples", 300u}, {"data", ""},
          {"dof", 5.0},              {"scale", 0.3},     {"b", 0.6},          {"quad_points", 2048u}};
}

inline const std::map<std::string, std::string> kHelp{
    {"backend", "quadrature or mc"},
    {"seed", "seed for Monte Carlo data"},
    {"n_samples", "Monte Carlo sample count"},
    {"data", "sample file used instead of drawing (mc backend)"},
    {"dof", "degrees of freedom of data and model"},
    {"scale", "scale of data and model"},
    {"b", "manual arctan flow width"},
    {"quad_points", "quadrature nodes"},
    {"objectives", "comma-separated: sm,dsm_manual,dsm_gaussian"},
    {"objective", "sm, dsm_manual or dsm_gaussian"},
    {"theta", "parameter grid lo:hi:step"},
    {"threshold", "gradient magnitude threshold"},
    {"in", "sweep CSV to read"},
    {"dofs", "comma-separated degrees of freedom"},
    {"y", "output grid lo:hi:step inside the flow image"},
    {"mode", "arctan prefactor: appendix_d or diffusion; estimation: full or plugin"},
    {"theta_init", "starting parameter"},
    {"lr", "learning rate"},
    {"max_iters", "iteration cap"},
    {"drift", "linear, tanh or cubic_damped"},
    {"a", "slope of the linear drift"},
    {"q_loc", "data location"},
    {"p_loc", "model location"},
    {"deltas", "comma-separated Euler step sizes"},
};

/// Buffered output, written to --out (or stdout) only after the command succeeds.
struct Output {
  std::string path;
  std::ostringstream body;

  void commit(std::ostream& stdout_stream) const {
    if (path.empty() || path == "-") {
      stdout_stream << body.str();
      return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot write '" + path + "'");
    f << body.str();
  }
};

// ---------------------------------------------------------------------------
// Commands

inline void run_sweep_command(const Params& p, Output& out) {
  const Range r = parse_range(p.text("theta"));
  SweepSpec spec;
  spec.theta_lo = r.lo;
  spec.theta_hi = r.hi;
  spec.step = r.step;
  spec.objectives = parse_objectives(p.text("objectives"));
  spec.model = model_from(p);
  std::string backend;
  const WeightedNodes nodes = data_nodes(p, backend);
  const SweepTable table = run_sweep(spec, nodes);
  io::write_sweep_csv(out.body, table, {"config: " + p.echo().dump(), "backend: " + backend});
}

inline void run_region_width_command(const Params& p, Output& out) {
  std::ifstream in(p.text("in"));
  if (!in) throw UsageError("cannot open sweep CSV '" + p.text("in") + "'");
  const io::SweepCsv csv = io::read_sweep_csv(in);
  const Objective o = parse_objectives(p.text("objective")).at(0);
  const RegionReport r = region_width(csv.table, o, p.number("threshold"));
  json intervals = json::array();
  for (const auto& [lo, hi] : r.intervals) intervals.push_back({lo, hi});
  const json doc{{"objective", std::string(objective_name(o))},
                 {"threshold", r.threshold},
                 {"total_width", r.total_width},
                 {"intervals", intervals},
                 {"config", p.echo()}};
  out.body << doc.dump(2) << '\n';
}

inline void run_robustness_command(const Params& p, Output& out) {
  const Range r = parse_range(p.text("theta"));
  SweepSpec spec;
  spec.theta_lo = r.lo;
  spec.theta_hi = r.hi;
  spec.step = r.step;
  spec.model.scale = p.number("scale");
  spec.model.manual_b = p.number("b");  // dof comes from each row
  const auto n = static_cast<std::size_t>(p.integer("quad_points"));
  const auto rows = robustness_sweep(parse_list(p.text("dofs")), spec,
                                     [n](const StudentT& q) { return default_quadrature(q, n); },
                                     p.number("threshold"));
  out.body << kConfigPrefix << p.echo().dump() << '\n';
  out.body << "dof,manual_argmin,gaussian_argmin,manual_width,gaussian_width\n";
  for (const auto& row : rows) {
    out.body << io::format_double(row.dof) << ',' << io::format_double(row.manual_argmin) << ','
             << io::format_double(row.gaussian_argmin) << ',' << io::format_double(row.manual_width)
             << ',' << io::format_double(row.gaussian_width) << '\n';
  }
}

inline void run_transformed_density_command(const Params& p, Output& out) {
  TransformedDensitySpec spec;
  spec.theta = p.number("theta");
  spec.b = p.number("b");
  spec.scale = p.number("scale");
  spec.dof = p.number("dof");
  const std::string mode = p.text("mode");
  if (mode == "appendix_d") {
    spec.mode = ArctanPrefactor::MatchAppendixD;
  } else if (mode == "diffusion") {
    spec.mode = ArctanPrefactor::MatchDiffusion;
  } else {
    throw UsageError("--mode must be appendix_d or diffusion, got '" + mode + "'");
  }
  const Range r = parse_range(p.text("y"));
  const auto rows = transformed_density_table(spec, theta_grid(r.lo, r.hi, r.step));
  const Interval image = ArctanFlow(spec.theta, spec.b, spec.mode).image();
  out.body << kConfigPrefix << p.echo().dump() << '\n';
  out.body << "# image: (" << io::format_double(image.lo) << ", " << io::format_double(image.hi) << ")\n";
  out.body << "y,log_p_y,log_q_y\n";
  for (const auto& row : rows) {
    out.body << io::format_double(row.y) << ',' << io::format_double(row.log_p_y) << ','
             << io::format_double(row.log_q_y) << '\n';
  }
}

inline void run_estimate_command(const Params& p, Output& out) {
  EstimationSpec spec;
  spec.objective = parse_objectives(p.text("objective")).at(0);
  spec.theta_init = p.number("theta_init");
  spec.lr = p.number("lr");
  spec.max_iters = static_cast<std::size_t>(p.integer("max_iters"));
  const std::string mode = p.text("mode");
  if (mode == "full") {
    spec.mode = GradientMode::Full;
  } else if (mode == "plugin") {
    spec.mode = GradientMode::PlugIn;
  } else {
    throw UsageError("--mode must be full or plugin, got '" + mode + "'");
  }
  spec.model = model_from(p);
  std::string backend;
  const EstimationTrace trace = estimate_theta(data_nodes(p, backend), spec);
  out.body << kConfigPrefix << p.echo().dump() << '\n';
  out.body << "# backend: " << backend << '\n';
  out.body << "# final_theta=" << io::format_double(trace.final_theta)
           << " converged=" << (trace.converged ? "true" : "false")
           << " diverged=" << (trace.diverged ? "true" : "false") << '\n';
  out.body << "iter,theta,loss,grad\n";
  for (const auto& s : trace.iterations) {
    out.body << s.index << ',' << io::format_double(s.theta) << ',' << io::format_double(s.loss) << ','
             << io::format_double(s.grad) << '\n';
  }
}

inline void run_ode_check_command(const Params& p, Output& out) {
  const StudentT q(p.number("q_loc"), p.number("scale"), p.number("dof"));
  const StudentT model(p.number("p_loc"), p.number("scale"), p.number("dof"));
  const OdeDrift drift = drifts::by_name(p.text("drift"), p.number("a"));
  const auto nodes = default_quadrature(q, static_cast<std::size_t>(p.integer("quad_points"))).nodes(q);
  const std::vector<double> deltas = parse_list(p.text("deltas"));
  std::vector<double> gaps;
  out.body << kConfigPrefix << p.echo().dump() << '\n';
  std::ostringstream rows;
  for (double d : deltas) {
    const EulerCheck c = euler_pushforward_check(q, model, drift, d, nodes);
    gaps.push_back(c.relative_gap());
    rows << io::format_double(d) << ',' << io::format_double(c.analytic) << ','
         << io::format_double(c.finite_diff) << ',' << io::format_double(c.relative_gap()) << '\n';
  }
  if (deltas.size() >= 2) out.body << "# order: " << io::format_double(convergence_order(deltas, gaps)) << '\n';
  out.body << "delta,analytic,finite_diff,relative_gap\n" << rows.str();
}

/// Returns false when any check fails.
inline bool run_verify_command(std::ostream& os) {
  bool all = true;
  for (const auto& r : verify::run_all()) {
    all = all && r.passed;
    os << (r.passed ? "PASS " : "FAIL ") << r.name << "  (worst " << r.worst << ", tolerance "
       << r.tolerance << ")";
    if (!r.detail.empty()) os << "  " << r.detail;
    os << '\n';
  }
  return all;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& stdout_stream, std::ostream& stderr_stream) {
  CLI::App app{"Diffusion score matching and flow-based Fisher divergence experiments", "dsmflow"};
  app.require_subcommand(1);

  auto data = data_defaults();
  auto with = [&](json extra) {
    json j = data;
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    return j;
  };

  struct Command {
    CLI::App* app;
    Params params;
    std::function<void(const Params&, Output&)> body;
  };
  std::vector<Command> commands;
  commands.reserve(6);
  auto add = [&](const std::string& name, const std::string& description, json defaults,
                 std::function<void(const Params&, Output&)> body) {
    commands.push_back({app.add_subcommand(name, description), Params(name, std::move(defaults)), std::move(body)});
  };

  add("sweep", "loss landscape over a parameter grid (CSV)",
      with({{"objectives", "sm,dsm_manual,dsm_gaussian"}, {"theta", "-10:10:0.01"}}), run_sweep_command);
  add("region-width", "fast-convergence region of a sweep CSV (JSON)",
      {{"in", ""}, {"objective", "dsm_gaussian"}, {"threshold", 1.0}}, run_region_width_command);
  add("robustness", "argmin and region width across degrees of freedom (CSV)",
      {{"dofs", "3,5,10,30"}, {"theta", "-10:10:0.01"}, {"scale", 0.3}, {"b", 0.6},
       {"threshold", 1.0}, {"quad_points", 2048u}},
      run_robustness_command);
  add("transformed-density", "log densities after the arctan flow (CSV)",
      {{"theta", -2.5}, {"b", 0.6}, {"mode", "appendix_d"}, {"scale", 0.3}, {"dof", 5.0},
       {"y", "-3.3:3.3:0.01"}},
      run_transformed_density_command);
  add("estimate", "gradient-descent estimate of the location (CSV trace)",
      with({{"objective", "dsm_gaussian"}, {"theta_init", 3.0}, {"lr", 0.05}, {"max_iters", 500u},
            {"mode", "full"}}),
      run_estimate_command);
  add("ode-check", "instantaneous Fisher change against Euler steps (CSV)",
      {{"drift", "tanh"}, {"a", 1.0}, {"q_loc", 0.0}, {"p_loc", 0.6}, {"scale", 0.3}, {"dof", 5.0},
       {"deltas", "1e-3,1e-4,1e-5"}, {"quad_points", 2048u}},
      run_ode_check_command);

  std::string out_path;
  for (auto& c : commands) {
    c.params.bind(*c.app, kHelp);
    c.app->add_option("--out", out_path, "output file (default stdout)");
  }
  CLI::App* verify_app = app.add_subcommand("verify", "run the numerical invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, stdout_stream, stderr_stream) == 0 ? 0 : 1;
  }

  try {
    if (verify_app->parsed()) return run_verify_command(stdout_stream) ? 0 : 2;
    for (auto& c : commands) {
      if (!c.app->parsed()) continue;
      c.params.resolve(*c.app);
      Output out{out_path, {}};
      c.body(c.params, out);
      out.commit(stdout_stream);
      return 0;
    }
  } catch (const UsageError& e) {
    stderr_stream << "usage error: " << e.what() << "\nrun with --help for the parameter list\n";
    return 1;
  } catch (const InvalidParam& e) {
    stderr_stream << "error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    stderr_stream << "error in " << e.module() << " (" << e.check() << "): " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    stderr_stream << "usage error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace dsmflow::cli
