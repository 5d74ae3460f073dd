#include "doseopt/io.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>

#include "doseopt/constructors.hpp"
#include "doseopt/error.hpp"

namespace doseopt {

namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool looks_exact(std::string_view s) {
  if (s.empty()) return false;
  for (char ch : s) {
    if (!(std::isdigit(static_cast<unsigned char>(ch)) || ch == '/' || ch == '-' || ch == '+' || ch == ' ')) {
      return false;
    }
  }
  return true;
}

double parse_decimal(std::string_view s) {
  if (looks_exact(s)) return to_double(parse_rational(s));
  double v = 0;
  const std::string_view body = (!s.empty() && s.front() == '+') ? s.substr(1) : s;
  const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
  if (body.empty() || ec != std::errc() || ptr != body.data() + body.size()) {
    throw ParseError("not a number: '" + std::string(s) + "'");
  }
  return v;
}

// Weight cells as text; exact when every cell is a fraction or integer.
Design design_from_cells(const ModelSpec& spec, const std::vector<std::vector<std::string>>& cells) {
  const int rows = spec.treatments();
  const int cols = spec.cohorts();
  if (static_cast<int>(cells.size()) != rows) {
    throw ParseError("expected " + std::to_string(rows) + " treatment rows, got " + std::to_string(cells.size()));
  }
  bool exact = true;
  for (const auto& row : cells) {
    if (static_cast<int>(row.size()) != cols) {
      throw ParseError("expected " + std::to_string(cols) + " cohort columns, got " + std::to_string(row.size()));
    }
    for (const auto& c : row) exact = exact && looks_exact(c);
  }
  if (exact) {
    RationalMatrix x(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int k = 0; k < cols; ++k) x(i, k) = parse_rational(cells[i][k]);
    }
    return make_design(spec, x);
  }
  Eigen::MatrixXd w(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int k = 0; k < cols; ++k) w(i, k) = parse_decimal(cells[i][k]);
  }
  return make_design(spec, w);
}

std::string cell_text(const Design& d, int i, int k) {
  if (d.exact_weights()) return format_rational((*d.exact_weights())(i, k));
  return format_double(d(i, k));
}

}  // namespace

FileFormat parse_file_format(std::string_view text) {
  if (text == "json") return FileFormat::Json;
  if (text == "csv") return FileFormat::Csv;
  throw InvalidParameter("unknown format '" + std::string(text) + "'");
}

FileFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? FileFormat::Csv : FileFormat::Json;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

Design design_from_json(const json& j) {
  try {
    const ModelSpec spec(j.at("n").get<int>(), parse_design_kind(j.at("kind").get<std::string>()));
    std::vector<std::vector<std::string>> cells;
    for (const json& row : j.at("weights")) {
      std::vector<std::string>& out = cells.emplace_back();
      for (const json& v : row) {
        if (v.is_string()) {
          out.push_back(std::string(trim(v.get<std::string>())));
        } else if (v.is_number_integer()) {
          out.push_back(std::to_string(v.get<long long>()));
        } else if (v.is_number()) {
          out.push_back(format_double(v.get<double>()));
        } else {
          throw ParseError("weights must be numbers or fraction strings");
        }
      }
    }
    return design_from_cells(spec, cells);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed design JSON: ") + e.what());
  }
}

json design_to_json(const Design& d) {
  json weights = json::array();
  for (int i = 0; i < d.spec().treatments(); ++i) {
    json row = json::array();
    for (int k = 0; k < d.spec().cohorts(); ++k) {
      if (d.exact_weights()) {
        row.push_back(format_rational((*d.exact_weights())(i, k)));
      } else {
        row.push_back(d(i, k));
      }
    }
    weights.push_back(std::move(row));
  }
  return json{{"n", d.spec().doses()}, {"kind", std::string(to_string(d.spec().kind()))}, {"weights", weights}};
}

Design design_from_csv(std::string_view text) {
  std::vector<std::vector<std::string>> cells;
  std::size_t header_cols = 0;
  bool header = true;
  for (std::string_view line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const std::vector<std::string_view> fields = split(line, ',');
    if (header) {
      header_cols = fields.size();
      header = false;
      continue;
    }
    if (fields.size() != header_cols) throw ParseError("ragged CSV row: '" + std::string(line) + "'");
    const std::string expected = std::to_string(cells.size());
    if (fields[0] != expected) throw ParseError("expected treatment " + expected + " in first column");
    std::vector<std::string>& row = cells.emplace_back();
    for (std::size_t c = 1; c < fields.size(); ++c) row.emplace_back(fields[c]);
  }
  if (cells.size() < 3 || header_cols < 3) throw ParseError("CSV design needs at least 2 doses");
  const int n = static_cast<int>(cells.size()) - 1;
  const int t = static_cast<int>(header_cols) - 1;
  DesignKind kind;
  if (t == n) {
    kind = DesignKind::Standard;
  } else if (t == n + 1) {
    kind = DesignKind::Extended;
  } else {
    throw ParseError("cohort count " + std::to_string(t) + " does not match " + std::to_string(n) + " doses");
  }
  return design_from_cells(ModelSpec(n, kind), cells);
}

std::string design_to_csv(const Design& d) {
  std::ostringstream os;
  os << "i\\k";
  for (int k = 1; k <= d.spec().cohorts(); ++k) os << ',' << k;
  os << '\n';
  for (int i = 0; i < d.spec().treatments(); ++i) {
    os << i;
    for (int k = 0; k < d.spec().cohorts(); ++k) os << ',' << cell_text(d, i, k);
    os << '\n';
  }
  return os.str();
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IOError("cannot write " + path.string());
  out << text;
  if (!out) throw IOError("write failed for " + path.string());
}

Design read_design(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  if (format_from_path(path) == FileFormat::Csv) return design_from_csv(text);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return design_from_json(j);
}

void write_design(const Design& d, const std::filesystem::path& path, FileFormat format) {
  write_text(path, format == FileFormat::Csv ? design_to_csv(d) : design_to_json(d).dump(2) + "\n");
}

json report_to_json(const CriterionReport& r) {
  json j{{"e", r.e_value}, {"a", r.a_value}, {"d", r.d_value}, {"mv", r.mv_value},
         {"avg_contrast", r.avg_contrast_variance}};
  j["lv"] = r.lv_values ? json(*r.lv_values) : json(nullptr);
  return j;
}

std::string report_csv_header() { return "e,a,d,mv,avg_contrast,lv"; }

std::string report_to_csv_line(const CriterionReport& r) {
  std::ostringstream os;
  os << format_double(r.e_value) << ',' << format_double(r.a_value) << ',' << format_double(r.d_value) << ','
     << format_double(r.mv_value) << ',' << format_double(r.avg_contrast_variance) << ',';
  if (r.lv_values) {
    for (std::size_t i = 0; i < r.lv_values->size(); ++i) os << (i ? ";" : "") << format_double((*r.lv_values)[i]);
  }
  return os.str();
}

json certification_to_json(const CertificationResult& r) {
  return json{{"claim", r.claim},
              {"status", r.certified() ? "certified" : "violated"},
              {"worst_gap", r.worst_gap},
              {"best_gap", r.best_gap},
              {"bound", r.bound},
              {"vertices", r.vertices},
              {"witness_vertex_index", r.witness_vertex_index},
              {"witness_treatments", r.witness_choices}};
}

DesignPolytope polytope_from_json(const json& j) {
  try {
    const ModelSpec spec(j.at("n").get<int>(), parse_design_kind(j.value("kind", std::string("standard"))));
    const std::string cls = j.value("class", std::string("base"));
    DesignPolytope poly = cls == "e-optimal" ? e_optimal_class(spec) : DesignPolytope(spec);
    if (cls != "e-optimal" && cls != "base") throw ParseError("unknown polytope class '" + cls + "'");
    if (j.contains("equalities")) {
      for (const json& e : j.at("equalities")) {
        LinearEquality eq;
        for (const json& c : e.at("cells")) eq.cells.push_back({c.at(0).get<int>(), c.at(1).get<int>() - 1});
        eq.coefficients = e.at("coefficients").get<std::vector<double>>();
        eq.rhs = e.at("rhs").get<double>();
        poly.add_equality(std::move(eq));
      }
    }
    return poly;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed polytope JSON: ") + e.what());
  }
}

SolverConfig solver_config_from_json(const json& j, SolverConfig c) {
  try {
    c.max_iters = j.value("max_iters", c.max_iters);
    c.stopping_gap = j.value("stopping_gap", c.stopping_gap);
    if (j.contains("step_rule")) {
      const std::string rule = j.at("step_rule").get<std::string>();
      if (rule == "exact") {
        c.step_rule = StepRule::ExactLineSearch;
      } else if (rule == "harmonic") {
        c.step_rule = StepRule::Harmonic;
      } else {
        throw ParseError("unknown step rule '" + rule + "'");
      }
    }
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.away_steps = j.value("away_steps", c.away_steps);
    c.stall_window = j.value("stall_window", c.stall_window);
    if (j.contains("e_temperatures")) c.e_temperatures = j.at("e_temperatures").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed solver config: ") + e.what());
  }
  if (c.stopping_gap <= 0) throw InvalidParameter("stopping_gap must be positive");
  return c;
}

json solver_config_to_json(const SolverConfig& c) {
  return json{{"max_iters", c.max_iters},
              {"stopping_gap", c.stopping_gap},
              {"step_rule", c.step_rule == StepRule::Harmonic ? "harmonic" : "exact"},
              {"seeds", c.seeds},
              {"away_steps", c.away_steps},
              {"stall_window", c.stall_window},
              {"e_temperatures", c.e_temperatures}};
}

std::string run_log_to_csv(const std::vector<IterationLog>& log) {
  std::ostringstream os;
  os << "iteration,objective,gap\n";
  for (const IterationLog& row : log) {
    os << row.iteration << ',' << format_double(row.objective) << ',' << format_double(row.gap) << '\n';
  }
  return os.str();
}

}  // namespace doseopt
