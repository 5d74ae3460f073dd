// doseopt: construct, evaluate, certify and optimise dose-escalation designs.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "doseopt/constructors.hpp"
#include "doseopt/criteria.hpp"
#include "doseopt/design.hpp"
#include "doseopt/error.hpp"
#include "doseopt/io.hpp"
#include "doseopt/optimizer.hpp"
#include "doseopt/rational.hpp"
#include "doseopt/verification.hpp"

using nlohmann::json;
using namespace doseopt;

namespace {

constexpr const char* kToolVersion = "1.0.0";

enum Exit { kOk = 0, kFailed = 2, kInputError = 3 };

struct Globals {
  std::string format;
  std::uint64_t seed = 0;
  double tolerance = kCertificationTolerance;
  std::string out;
  std::vector<std::string> argv;
};

FileFormat output_format(const Globals& g) {
  if (!g.format.empty()) return parse_file_format(g.format);
  if (!g.out.empty()) return format_from_path(g.out);
  return FileFormat::Json;
}

// Writes text to --out, or stdout when no path was given.
void emit(const Globals& g, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
  } else {
    write_text(g.out, text);
  }
}

void write_manifest(const Globals& g, const std::string& command, const json& inputs,
                    std::vector<std::string> outputs) {
  if (g.out.empty()) return;
  outputs.insert(outputs.begin(), g.out);
  json m{{"command", command},    {"inputs", inputs}, {"outputs", outputs},
         {"seed", g.seed},        {"tool_version", kToolVersion}, {"argv", g.argv}};
  write_text(g.out + ".manifest.json", m.dump(2) + "\n");
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json nullable(const std::optional<bool>& b) { return b ? json(*b) : json(nullptr); }

// "1,-1/2,0" -> vector
Eigen::VectorXd parse_vector(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(to_double(parse_rational(item)));
  return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<int>(values.size()));
}

int run_construct(const Globals& g, const std::string& name, int n) {
  const NamedDesignKind kind = parse_named_design(name);
  const Design d = named_design(kind, n);
  emit(g, output_format(g) == FileFormat::Csv ? design_to_csv(d) : dump(design_to_json(d)));
  write_manifest(g, "construct", {{"name", name}, {"n", n}}, {});
  return kOk;
}

json evaluation_json(const Design& d) {
  const ModelSpec& spec = d.spec();
  json j{{"n", spec.doses()}, {"kind", to_string(spec.kind())}, {"feasible", is_feasible(d)}};
  if (j["feasible"]) {
    const json r = report_to_json(evaluate(d));
    j.update(r);
  } else {
    for (const char* key : {"e", "a", "d", "mv", "avg_contrast", "lv"}) j[key] = nullptr;
  }
  const ReplicationProfile rep = replication_profile(d);
  j["replication"] = {{"treatment", std::vector<double>(rep.treatment.data(), rep.treatment.data() + rep.treatment.size())},
                      {"cohort", std::vector<double>(rep.cohort.data(), rep.cohort.data() + rep.cohort.size())}};
  const bool standard = spec.kind() == DesignKind::Standard;
  j["is_e_optimal_standard"] = nullable(standard ? std::optional<bool>(is_e_optimal_standard(d)) : std::nullopt);
  j["is_e_optimal_extended"] = nullable(standard ? std::nullopt : std::optional<bool>(is_e_optimal_extended(d)));
  return j;
}

int run_evaluate(const Globals& g, const std::string& path) {
  const Design d = read_design(path);
  const json j = evaluation_json(d);
  if (output_format(g) == FileFormat::Csv) {
    std::string line;
    if (j["feasible"]) {
      line = report_to_csv_line(evaluate(d));
    } else {
      line = ",,,,,";
    }
    emit(g, "feasible," + report_csv_header() + "\n" + (j["feasible"] ? "true," : "false,") + line + "\n");
  } else {
    emit(g, dump(j));
  }
  write_manifest(g, "evaluate", {{"design", path}}, {});
  return kOk;
}

int run_certify(const Globals& g, const std::string& path, const std::string& claim) {
  const Design d = read_design(path);
  std::vector<CertificationResult> results;
  if (claim == "e") {
    results.push_back(certify_e_default(d, g.tolerance));
  } else if (claim == "lv") {
    results = certify_lv_optimality(d, g.tolerance);
  } else if (claim.rfind("c:", 0) == 0) {
    const Eigen::VectorXd c = parse_vector(claim.substr(2));
    if (c.size() != d.spec().parameters()) {
      throw InvalidParameter("c must have " + std::to_string(d.spec().parameters()) + " entries");
    }
    results.push_back(certify_c_optimality(d, c, default_ginverse(d), g.tolerance));
  } else {
    throw InvalidParameter("claim must be e, lv or c:<vector>");
  }

  bool all = true;
  json arr = json::array();
  for (const auto& r : results) {
    all = all && r.certified();
    arr.push_back(certification_to_json(r));
  }
  const json out = results.size() == 1 ? arr.front() : arr;
  if (output_format(g) == FileFormat::Csv) {
    std::ostringstream os;
    os << "claim,status,worst_gap,best_gap,bound,vertices,witness_vertex_index\n";
    for (const auto& r : arr) {
      os << r["claim"].get<std::string>() << ',' << r["status"].get<std::string>() << ','
         << format_double(r["worst_gap"]) << ',' << format_double(r["best_gap"]) << ','
         << format_double(r["bound"]) << ',' << r["vertices"] << ',' << r["witness_vertex_index"] << '\n';
    }
    emit(g, os.str());
  } else {
    emit(g, dump(out));
  }
  write_manifest(g, "certify", {{"design", path}, {"claim", claim}, {"tolerance", g.tolerance}}, {});
  return all ? kOk : kFailed;
}

struct OptimizeArgs {
  int n = 0;
  std::string kind = "extended";
  std::string polytope_class = "e-optimal";
  std::string polytope_file;
  std::string objective = "A";
  std::string config_file;
  std::optional<int> max_iters;
  std::optional<double> stopping_gap;
  std::optional<int> starts;
  std::string log_file;
};

int run_optimize(const Globals& g, const OptimizeArgs& a) {
  json inputs{{"objective", a.objective}};
  std::optional<DesignPolytope> poly;
  if (!a.polytope_file.empty()) {
    poly.emplace(polytope_from_json(json::parse(read_text(a.polytope_file))));
    inputs["polytope"] = a.polytope_file;
  } else {
    if (a.n < 2) throw InvalidParameter("--n or --polytope is required");
    const ModelSpec spec(a.n, parse_design_kind(a.kind));
    if (a.polytope_class == "e-optimal") {
      poly.emplace(e_optimal_class(spec));
    } else if (a.polytope_class == "base") {
      poly.emplace(spec);
    } else {
      throw InvalidParameter("class must be base or e-optimal");
    }
    inputs["n"] = a.n;
    inputs["kind"] = a.kind;
    inputs["class"] = a.polytope_class;
  }

  SolverConfig cfg;
  if (!a.config_file.empty()) {
    cfg = solver_config_from_json(json::parse(read_text(a.config_file)));
    inputs["config"] = a.config_file;
  }
  if (a.max_iters) cfg.max_iters = *a.max_iters;
  if (a.stopping_gap) cfg.stopping_gap = *a.stopping_gap;
  // Seeds come from --seed/--starts unless a config file lists its own.
  if (a.starts || a.config_file.empty()) {
    const int starts = a.starts.value_or(1);
    if (starts < 1) throw InvalidParameter("--starts must be at least 1");
    cfg.seeds.clear();
    for (int i = 0; i < starts; ++i) cfg.seeds.push_back(g.seed + static_cast<std::uint64_t>(i));
  }
  inputs["solver"] = solver_config_to_json(cfg);

  const OptimizationResult r = maximize(*poly, parse_objective_kind(a.objective), cfg);

  emit(g, output_format(g) == FileFormat::Csv ? design_to_csv(r.design) : dump(design_to_json(r.design)));
  std::string log_path = a.log_file;
  if (log_path.empty() && !g.out.empty()) log_path = g.out + ".log.csv";
  std::vector<std::string> extra;
  if (!log_path.empty()) {
    write_text(log_path, run_log_to_csv(r.log));
    extra.push_back(log_path);
  }
  write_manifest(g, "optimize", inputs, extra);

  std::cerr << "objective " << to_string(parse_objective_kind(a.objective)) << " criterion "
            << format_double(r.criterion) << " gap " << format_double(r.gap) << " iterations " << r.iterations
            << (r.converged ? " converged" : " not converged") << '\n';
  if (r.e_certificate) {
    std::cerr << "e certificate " << (r.e_certificate->certified() ? "certified" : "violated") << " worst gap "
              << format_double(r.e_certificate->worst_gap) << '\n';
  }
  return r.converged ? kOk : kFailed;
}

struct OracleArgs {
  int n = 2;
  std::string kind = "standard";
  std::string objective = "e";
  int resolution = 40;
  int refine = 100;
};

int run_oracle(const Globals& g, const OracleArgs& a) {
  const ModelSpec spec(a.n, parse_design_kind(a.kind));
  OracleResult r = [&] {
    if (a.objective == "e") return brute_force_best_e(spec, a.resolution, a.refine);
    if (a.objective.rfind("lv:", 0) == 0) {
      return brute_force_best_lv(spec, std::stoi(a.objective.substr(3)), a.resolution, a.refine);
    }
    throw InvalidParameter("oracle objective must be e or lv:<stage>");
  }();
  if (output_format(g) == FileFormat::Csv) {
    emit(g, design_to_csv(r.design));
  } else {
    emit(g, dump({{"objective", a.objective}, {"value", r.value}, {"evaluated", r.evaluated},
                  {"design", design_to_json(r.design)}}));
  }
  std::cerr << "value " << format_double(r.value) << " over " << r.evaluated << " points\n";
  write_manifest(g, "oracle",
                 {{"n", a.n}, {"kind", a.kind}, {"objective", a.objective}, {"resolution", a.resolution},
                  {"refine", a.refine}},
                 {});
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  Globals g;
  g.argv.assign(argv, argv + argc);

  CLI::App app{"Optimal designs for placebo-controlled dose-escalation studies"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  app.add_option("--format", g.format, "Output format (json or csv); default from --out extension")
      ->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--seed", g.seed, "Base random seed");
  app.add_option("--tolerance", g.tolerance, "Absolute tolerance for certification gaps");
  app.add_option("--out", g.out, "Output file; stdout when omitted");

  std::string name;
  int construct_n = 0;
  auto* construct = app.add_subcommand("construct", "Write a closed-form design");
  construct->add_option("name", name, "senn, uniform-extended or highest-dose-extended")->required();
  construct->add_option("--n", construct_n, "Number of doses")->required();

  std::string design_path;
  auto* eval = app.add_subcommand("evaluate", "Report every criterion for a design file");
  eval->add_option("design", design_path, "Design file (.json or .csv)")->required()->check(CLI::ExistingFile);

  std::string claim = "e";
  auto* certify = app.add_subcommand("certify", "Check an optimality claim at every polytope vertex");
  certify->add_option("design", design_path, "Design file")->required()->check(CLI::ExistingFile);
  certify->add_option("--claim", claim, "e, lv, or c:<comma separated coefficients over the full parameter>");

  OptimizeArgs opt;
  auto* optimize = app.add_subcommand("optimize", "Maximise A, D or E over a design polytope");
  optimize->add_option("--n", opt.n, "Number of doses");
  optimize->add_option("--kind", opt.kind, "standard or extended");
  optimize->add_option("--class", opt.polytope_class, "base or e-optimal");
  optimize->add_option("--polytope", opt.polytope_file, "Polytope JSON; overrides --n/--kind/--class");
  optimize->add_option("--objective", opt.objective, "A, D or E");
  optimize->add_option("--config", opt.config_file, "Solver config JSON");
  optimize->add_option("--max-iters", opt.max_iters, "Iteration cap per run");
  optimize->add_option("--stopping-gap", opt.stopping_gap, "Frank-Wolfe gap target");
  optimize->add_option("--starts", opt.starts, "Number of starts, seeded from --seed upward (default 1)");
  optimize->add_option("--log", opt.log_file, "Run log CSV; defaults to <out>.log.csv");

  OracleArgs oracle_args;
  auto* oracle = app.add_subcommand("oracle", "Grid search for small designs");
  oracle->add_option("--n", oracle_args.n, "Number of doses (at most 3)");
  oracle->add_option("--kind", oracle_args.kind, "standard or extended");
  oracle->add_option("--objective", oracle_args.objective, "e or lv:<stage>");
  oracle->add_option("--resolution", oracle_args.resolution, "Grid points per cohort mass");
  oracle->add_option("--refine", oracle_args.refine, "Refinement passes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (*construct) return run_construct(g, name, construct_n);
    if (*eval) return run_evaluate(g, design_path);
    if (*certify) return run_certify(g, design_path, claim);
    if (*optimize) return run_optimize(g, opt);
    if (*oracle) return run_oracle(g, oracle_args);
  } catch (const SingularIterate& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}
