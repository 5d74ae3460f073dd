#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "doseopt/constructors.hpp"
#include "doseopt/io.hpp"
#include "support.hpp"

using namespace doseopt;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "doseopt_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path at(const std::string& name) { return workdir() / name; }

int run(const std::string& args) {
  const std::string cmd = std::string(DOSEOPT_CLI) + " " + args + " 2>" + at("stderr.txt").string() + " >" +
                          at("stdout.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json read_json(const fs::path& p) { return json::parse(read_text(p)); }

}  // namespace

TEST_CASE("construct writes the published designs") {
  REQUIRE(run("construct senn --n 4 --out " + at("senn4.csv").string()) == 0);
  const std::string csv = read_text(at("senn4.csv"));
  CHECK(csv == read_text(testing::data_dir() / "senn_n4.csv"));

  REQUIRE(run("construct uniform-extended --n 4 --format csv --out " + at("ue4.txt").string()) == 0);
  CHECK(read_text(at("ue4.txt")) == read_text(testing::data_dir() / "uniform_extended_n4.csv"));

  REQUIRE(run("construct highest-dose-extended --n 4 --out " + at("hd4.csv").string()) == 0);
  CHECK(read_text(at("hd4.csv")) == read_text(testing::data_dir() / "highest_dose_extended_n4.csv"));

  const json m = read_json(at("senn4.csv.manifest.json"));
  CHECK(m["command"] == "construct");
  CHECK(m["outputs"][0] == at("senn4.csv").string());
  CHECK(m.contains("tool_version"));
  CHECK(m.contains("seed"));

  CHECK(run("construct senn --n 1") == 3);
  CHECK(run("construct bogus --n 3") == 3);
  CHECK(run("construct senn") == 3);
}

TEST_CASE("evaluate reports criteria and membership") {
  REQUIRE(run("construct senn --n 4 --out " + at("s4.json").string()) == 0);
  REQUIRE(run("evaluate " + at("s4.json").string() + " --out " + at("s4.eval.json").string()) == 0);
  const json e = read_json(at("s4.eval.json"));
  CHECK(e["feasible"] == true);
  CHECK(e["e"] == 0.0625);
  CHECK(e["mv"] == 16.0);
  REQUIRE(e["lv"].size() == 4);
  for (const auto& v : e["lv"]) CHECK(std::abs(v.get<double>() - 16) < 1e-9);
  CHECK(e["is_e_optimal_standard"] == true);
  CHECK(e["is_e_optimal_extended"].is_null());

  REQUIRE(run("evaluate " + (testing::data_dir() / "a_optimal_class_n4.csv").string() + " --out " + at("t3.eval.json").string()) ==
          0);
  CHECK(read_json(at("t3.eval.json"))["is_e_optimal_extended"] == true);

  write_text(at("placebo.csv"), "i\\k,1,2\n0,1/2,1/2\n1,0,0\n2,0,0\n");
  REQUIRE(run("evaluate " + at("placebo.csv").string() + " --out " + at("placebo.eval.json").string()) == 0);
  const json p = read_json(at("placebo.eval.json"));
  CHECK(p["feasible"] == false);
  CHECK(p["e"].is_null());
  CHECK(p["lv"].is_null());

  write_text(at("broken.csv"), "i\\k,1,2\n0,1/2,1/4\n1,1/4,0\n2,0,1/4\n");
  CHECK(run("evaluate " + at("broken.csv").string()) == 3);
  write_text(at("garbage.json"), "{");
  CHECK(run("evaluate " + at("garbage.json").string()) == 3);
  CHECK(run("evaluate " + at("missing.json").string()) == 3);
}

TEST_CASE("certify exit codes follow the verdict") {
  REQUIRE(run("construct senn --n 4 --out " + at("c_s4.json").string()) == 0);
  REQUIRE(run("certify " + at("c_s4.json").string() + " --claim e --out " + at("c_s4.cert.json").string()) == 0);
  const json c = read_json(at("c_s4.cert.json"));
  CHECK(c["status"] == "certified");
  CHECK(c["worst_gap"].get<double>() <= 1e-10);

  REQUIRE(run("construct highest-dose-extended --n 4 --out " + at("c_h4.json").string()) == 0);
  CHECK(run("certify " + at("c_h4.json").string() + " --claim c:-1,0,0,0,1,0,0,0,0,0,0") == 0);
  CHECK(run("certify " + at("c_h4.json").string() + " --claim lv") == 0);
  CHECK(run("certify " + at("c_h4.json").string() + " --claim c:1,2") == 3);
  CHECK(run("certify " + at("c_h4.json").string() + " --claim mv") == 3);

  // Perturb the Senn design and push it back onto the constraints.
  Eigen::MatrixXd w = senn_design(4).weights();
  w(0, 1) -= 0.01;
  w(2, 1) += 0.01;
  w(0, 2) += 0.01;
  w(3, 2) -= 0.01;
  write_design(make_design(ModelSpec(4, DesignKind::Standard), w), at("perturbed.json"), FileFormat::Json);
  CHECK(run("certify " + at("perturbed.json").string() + " --claim e") == 2);
}

TEST_CASE("optimize writes design, log and manifest") {
  REQUIRE(run("optimize --n 4 --kind extended --class e-optimal --objective A --out " + at("a4.csv").string()) == 0);
  const Design a = read_design(at("a4.csv"));
  CHECK((a.weights() - read_design(testing::data_dir() / "a_optimal_class_n4.csv").weights()).cwiseAbs().maxCoeff() <= 2e-3);
  CHECK(read_text(at("a4.csv.log.csv")).rfind("iteration,objective,gap\n", 0) == 0);
  const json m = read_json(at("a4.csv.manifest.json"));
  CHECK(m["command"] == "optimize");
  CHECK(m["outputs"].size() == 2);

  REQUIRE(run("optimize --n 4 --objective D --seed 3 --starts 2 --out " + at("d4a.json").string()) == 0);
  REQUIRE(run("optimize --n 4 --objective D --seed 3 --starts 2 --out " + at("d4b.json").string()) == 0);
  CHECK(read_text(at("d4a.json")) == read_text(at("d4b.json")));
  CHECK((read_design(at("d4a.json")).weights() - read_design(testing::data_dir() / "d_optimal_class_n4.csv").weights())
            .cwiseAbs()
            .maxCoeff() <= 2e-3);

  REQUIRE(run("optimize --n 2 --kind standard --class base --objective E --out " + at("e2.json").string()) == 0);
  CHECK((read_design(at("e2.json")).weights() - senn_design(2).weights()).cwiseAbs().maxCoeff() <= 1e-3);

  write_text(at("poly.json"), R"({"n": 3, "kind": "extended", "class": "e-optimal"})");
  write_text(at("cfg.json"), R"({"max_iters": 3, "stopping_gap": 1e-12})");
  CHECK(run("optimize --polytope " + at("poly.json").string() + " --config " + at("cfg.json").string() +
            " --objective D --out " + at("capped.json").string()) == 2);
  CHECK(read_design(at("capped.json")).spec() == ModelSpec(3, DesignKind::Extended));

  write_text(at("empty.json"),
             R"({"n": 2, "equalities": [{"cells": [[0, 1]], "coefficients": [1], "rhs": 0.9}]})");
  CHECK(run("optimize --polytope " + at("empty.json").string() + " --objective A") == 3);
  CHECK(run("optimize --objective A") == 3);
}

TEST_CASE("oracle command") {
  REQUIRE(run("oracle --n 2 --kind standard --resolution 20 --out " + at("o.json").string()) == 0);
  const json o = read_json(at("o.json"));
  CHECK(std::abs(o["value"].get<double>() - 0.125) < 5e-3);
  CHECK(design_from_json(o["design"]).spec() == ModelSpec(2, DesignKind::Standard));
  CHECK(run("oracle --n 5") == 3);
}

TEST_CASE("help and version") {
  CHECK(run("--help") == 0);
  CHECK(run("--version") == 0);
  CHECK(run("") == 3);
}
