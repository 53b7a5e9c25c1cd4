#pragma once

// Plain-text artifacts: sample files (one value per line) and CSV tables with
// a `#`-prefixed comment header. Numbers are written with 17 significant
// digits so every double survives a write/read cycle exactly.

#include <charconv>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dsmflow/densities.hpp"
#include "dsmflow/error.hpp"
#include "dsmflow/experiments.hpp"

namespace dsmflow::io {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Shortest text that reads back to the same double (0.3, not 0.29999...).
inline std::string format_shortest(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw InvalidParam("io", "not a number: '" + s + "'");
  }
  if (used != s.size()) throw InvalidParam("io", "trailing characters in number '" + s + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

// ---------------------------------------------------------------------------
// Sample files

/// `# seed=42 n=300 dist=student_t loc=0 scale=0.3 dof=5`
inline std::string student_t_sample_header(std::uint64_t seed, std::size_t n, const StudentT& d) {
  std::ostringstream os;
  os << "# seed=" << seed << " n=" << n << " dist=student_t loc=" << format_shortest(d.location())
     << " scale=" << format_shortest(d.scale()) << " dof=" << format_shortest(d.dof());
  return os.str();
}

inline void write_samples(std::ostream& os, const SampleSet& samples, const std::string& header) {
  os << header << '\n';
  for (double v : samples.values) os << format_double(v) << '\n';
}

struct SampleFile {
  std::vector<std::string> comments;
  SampleSet samples;
};

inline SampleFile read_samples(std::istream& is) {
  SampleFile out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      out.comments.push_back(line);
      continue;
    }
    out.samples.values.push_back(parse_double(line));
  }
  if (out.samples.values.empty()) throw InvalidParam("io", "sample file holds no values");
  return out;
}

// ---------------------------------------------------------------------------
// Sweep CSV: theta,<objectives...>,grad_<objectives...>

inline void write_sweep_csv(std::ostream& os, const SweepTable& table,
                            const std::vector<std::string>& comments) {
  for (const auto& c : comments) os << "# " << c << '\n';
  os << "theta";
  for (Objective o : table.objectives) os << ',' << objective_name(o);
  for (Objective o : table.objectives) os << ",grad_" << objective_name(o);
  os << '\n';
  for (const auto& row : table.rows) {
    os << format_double(row.theta);
    for (double l : row.loss) os << ',' << format_double(l);
    for (const auto& g : row.grad) {
      os << ',';
      if (g) os << format_double(*g);
    }
    os << '\n';
  }
}

struct SweepCsv {
  std::vector<std::string> comments;  // without the leading "# "
  SweepTable table;
};

inline SweepCsv read_sweep_csv(std::istream& is) {
  SweepCsv out;
  std::string line;
  std::optional<std::vector<std::string>> header;
  std::size_t k = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      out.comments.push_back(line.size() > 2 && line[1] == ' ' ? line.substr(2) : line.substr(1));
      continue;
    }
    const auto fields = split(line, ',');
    if (!header) {
      header = fields;
      if (fields.empty() || fields[0] != "theta" || fields.size() % 2 != 1) {
        throw InvalidParam("io", "sweep CSV header must be theta,<objectives>,grad_<objectives>");
      }
      k = (fields.size() - 1) / 2;
      for (std::size_t i = 0; i < k; ++i) {
        out.table.objectives.push_back(parse_objective(fields[1 + i]));
        if (fields[1 + k + i] != "grad_" + fields[1 + i]) {
          throw InvalidParam("io", "sweep CSV gradient column '" + fields[1 + k + i] +
                                       "' does not match '" + fields[1 + i] + "'");
        }
      }
      continue;
    }
    if (fields.size() != 1 + 2 * k) throw InvalidParam("io", "sweep CSV row has wrong arity: " + line);
    SweepRow row{parse_double(fields[0]), {}, {}};
    for (std::size_t i = 0; i < k; ++i) row.loss.push_back(parse_double(fields[1 + i]));
    for (std::size_t i = 0; i < k; ++i) {
      const auto& f = fields[1 + k + i];
      row.grad.push_back(f.empty() ? std::nullopt : std::optional<double>(parse_double(f)));
    }
    out.table.rows.push_back(std::move(row));
  }
  if (!header) throw InvalidParam("io", "sweep CSV has no header");
  return out;
}

}  // namespace dsmflow::io
