#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "doseopt/criteria.hpp"
#include "doseopt/design.hpp"
#include "doseopt/optimizer.hpp"
#include "doseopt/verification.hpp"

namespace doseopt {

enum class FileFormat { Json, Csv };

FileFormat parse_file_format(std::string_view text);
/// ".csv" means CSV, anything else JSON.
FileFormat format_from_path(const std::filesystem::path& path);

// Design files. JSON: {"n", "kind", "weights": rows of numbers or fraction
// strings}. CSV: header "i\k,1,..,t" then one row per treatment. A design
// whose every weight is a fraction or integer keeps exact weights.

Design design_from_json(const nlohmann::json& j);
nlohmann::json design_to_json(const Design& d);
Design design_from_csv(std::string_view text);
std::string design_to_csv(const Design& d);

Design read_design(const std::filesystem::path& path);
void write_design(const Design& d, const std::filesystem::path& path, FileFormat format);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

nlohmann::json report_to_json(const CriterionReport& r);
std::string report_csv_header();
std::string report_to_csv_line(const CriterionReport& r);

/// {claim, status, worst_gap, witness_vertex_index, ...}
nlohmann::json certification_to_json(const CertificationResult& r);

/// {"n", "kind", "class": "base"|"e-optimal", "equalities": [{"cells":
/// [[i, k], ...], "coefficients": [...], "rhs": v}]}; cohorts are 1-based.
DesignPolytope polytope_from_json(const nlohmann::json& j);

/// {"max_iters", "stopping_gap", "step_rule": "exact"|"harmonic", "seeds",
/// "away_steps", "e_temperatures"}; missing keys keep their defaults.
SolverConfig solver_config_from_json(const nlohmann::json& j, SolverConfig base = {});
nlohmann::json solver_config_to_json(const SolverConfig& c);

std::string run_log_to_csv(const std::vector<IterationLog>& log);

}  // namespace doseopt
