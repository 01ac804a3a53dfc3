#ifndef LANSING_IO_HPP
#define LANSING_IO_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "lansing/demography.hpp"
#include "lansing/errors.hpp"
#include "lansing/ibm.hpp"
#include "lansing/inclusion.hpp"
#include "lansing/pde.hpp"
#include "lansing/tss.hpp"

namespace lansing::io {

using json = nlohmann::ordered_json;

/// Shortest decimal text that parses back to the same double.
[[nodiscard]] inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

[[nodiscard]] inline std::string format_number(std::uint64_t v) { return std::to_string(v); }

[[nodiscard]] inline double parse_number(std::string_view s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw DomainError("parse_number: not a number: '" + std::string(s) + "'");
  }
  return v;
}

/// Comma-separated rows with a fixed header; no quoting (fields never contain commas).
class CsvWriter {
 public:
  CsvWriter(std::ostream& os, std::vector<std::string> header) : os_(os), width_(header.size()) {
    emit(header);
  }

  void row(const std::vector<std::string>& fields) {
    if (fields.size() != width_) throw DimensionError("CsvWriter: row width mismatch");
    emit(fields);
  }

 private:
  void emit(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) os_ << ',';
      os_ << fields[i];
    }
    os_ << '\n';
  }

  std::ostream& os_;
  std::size_t width_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  [[nodiscard]] std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw DomainError("CsvTable: no column '" + std::string(name) + "'");
  }
};

[[nodiscard]] inline CsvTable read_csv(std::istream& is) {
  CsvTable t;
  std::string line;
  const auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(s);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  if (!std::getline(is, line)) throw DomainError("read_csv: missing header");
  t.header = split(line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto fields = split(line);
    if (fields.size() != t.header.size()) throw DimensionError("read_csv: ragged row");
    t.rows.push_back(std::move(fields));
  }
  return t;
}

inline const std::vector<std::string> kSnapshotColumns{"time",   "n_alive", "mean_xb",
                                                       "mean_xd", "var_xb", "var_xd"};
inline const std::vector<std::string> kEventColumns{"time", "event_type", "id",        "parent_id",
                                                    "xb",   "xd",         "lansing_flag"};
inline const std::vector<std::string> kPathColumns{"t", "xb", "xd", "event_index"};
inline const std::vector<std::string> kSolutionColumns{"t", "xb", "xd", "phase"};

inline void write_snapshots(std::ostream& os, const std::vector<ibm::Snapshot>& snaps) {
  CsvWriter w(os, kSnapshotColumns);
  for (const auto& s : snaps) {
    w.row({format_number(s.time), format_number(static_cast<std::uint64_t>(s.n_alive)),
           format_number(s.mean_xb), format_number(s.mean_xd), format_number(s.var_xb),
           format_number(s.var_xd)});
  }
}

/// Streams IBM events (births and deaths; null proposals are not events).
class EventLogWriter {
 public:
  explicit EventLogWriter(std::ostream& os) : w_(os, kEventColumns) {}

  void operator()(const ibm::EventRecord& r) {
    const std::string parent =
        r.parent_id == ibm::kNoParent ? "-1" : std::to_string(r.parent_id);
    w_.row({format_number(r.time), std::string(ibm::to_string(r.type)), std::to_string(r.id), parent,
            format_number(r.trait.xb), format_number(r.trait.xd), r.lansing ? "1" : "0"});
  }

 private:
  CsvWriter w_;
};

/// Columns age, n1, n2[, n3, n4]: cell-centre ages and component densities.
inline void write_density(std::ostream& os, const pde::DensityField& f) {
  std::vector<std::string> header{"age"};
  for (std::size_t k = 0; k < f.size(); ++k) header.push_back("n" + std::to_string(k + 1));
  CsvWriter w(os, header);
  for (std::size_t i = 0; i < f.grid.n_cells; ++i) {
    std::vector<std::string> row{format_number(f.grid.center(i))};
    for (std::size_t k = 0; k < f.size(); ++k) row.push_back(format_number(f.comps[k][i]));
    w.row(row);
  }
}

/// Mass time series; `masses[j]` are the component masses at `times[j]`.
inline void write_masses(std::ostream& os, const std::vector<double>& times,
                         const std::vector<std::vector<double>>& masses) {
  if (times.size() != masses.size()) throw DimensionError("write_masses: length mismatch");
  const std::size_t k = masses.empty() ? 0 : masses.front().size();
  std::vector<std::string> header{"t"};
  for (std::size_t c = 0; c < k; ++c) header.push_back("mass_" + std::to_string(c + 1));
  CsvWriter w(os, header);
  for (std::size_t j = 0; j < times.size(); ++j) {
    std::vector<std::string> row{format_number(times[j])};
    for (double m : masses[j]) row.push_back(format_number(m));
    w.row(row);
  }
}

inline void write_path(std::ostream& os, const tss::JumpPath& p) {
  CsvWriter w(os, kPathColumns);
  for (std::size_t k = 0; k < p.traits.size(); ++k) {
    w.row({format_number(p.times[k]), format_number(p.traits[k].xb), format_number(p.traits[k].xd),
           std::to_string(k)});
  }
}

[[nodiscard]] inline tss::JumpPath read_path(std::istream& is) {
  const CsvTable t = read_csv(is);
  if (t.header != kPathColumns) throw DomainError("read_path: unexpected header");
  tss::JumpPath p;
  for (const auto& r : t.rows) {
    p.times.push_back(parse_number(r[0]));
    p.traits.push_back({parse_number(r[1]), parse_number(r[2])});
  }
  p.t_final = p.times.empty() ? 0.0 : p.times.back();
  return p;
}

inline void write_solution(std::ostream& os, const inclusion::InclusionSolution& s) {
  CsvWriter w(os, kSolutionColumns);
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    w.row({format_number(s.times[k]), format_number(s.points[k].xb), format_number(s.points[k].xd),
           std::string(inclusion::to_string(s.phases[k]))});
  }
}

namespace detail {
inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
}  // namespace detail

/// Demographic summary of any trait. Quantities that do not exist for the
/// trait's region (gradient on the diagonal, equilibrium of a non-viable
/// trait, lambda below the span floor) are null.
[[nodiscard]] inline json profile_json(const LifeTrait& x, double eta) {
  validate(x);
  const TraitRegion region = classify(x);
  json j;
  j["x_b"] = x.xb;
  j["x_d"] = x.xd;
  j["region"] = std::string(to_string(region));
  j["eta"] = eta;
  const double lambda = x.tau() > 0.0 ? demography::growth_rate(x.tau()).lambda
                                      : -std::numeric_limits<double>::infinity();
  j["lambda"] = detail::number_or_null(lambda);
  const char* keys[] = {"grad", "G", "F11", "F21", "F22", "a21", "a22", "rho1", "rho2", "n1_0", "n2_0"};
  if (region == TraitRegion::NonViable) {
    for (const char* k : keys) j[k] = nullptr;
    return j;
  }
  const demography::DemographicProfile p = demography::equilibrium(x, eta);
  j["grad"] = p.grad_lambda ? json::array({(*p.grad_lambda)[0], (*p.grad_lambda)[1]}) : json(nullptr);
  j["G"] = p.gen_time_G;
  j["F11"] = p.F11;
  j["F21"] = p.F21;
  j["F22"] = p.F22;
  j["a21"] = p.a21;
  j["a22"] = p.a22;
  j["rho1"] = p.rho1;
  j["rho2"] = p.rho2;
  j["n1_0"] = p.n1_at_0;
  j["n2_0"] = p.n2_at_0;
  return j;
}

[[nodiscard]] inline json tube_report_json(const inclusion::TubeReport& r) {
  json j;
  j["pass"] = r.pass;
  j["max_pre_hit_dist"] = r.max_pre_hit_dist;
  j["max_diag_gap"] = r.max_diag_gap;
  j["monotone_ok"] = r.monotone_ok;
  j["speed_ok"] = r.speed_ok;
  j["tolerance"] = r.tolerance;
  j["hit_time"] = r.hit ? json(r.hit_time) : json(nullptr);
  j["max_speed_excess"] = r.max_speed_excess;
  j["effective_u"] = r.effective_u;
  return j;
}

}  // namespace lansing::io

#endif  // LANSING_IO_HPP
