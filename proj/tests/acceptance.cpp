// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "doseopt/constructors.hpp"
#include "doseopt/criteria.hpp"
#include "doseopt/design.hpp"
#include "doseopt/error.hpp"
#include "doseopt/io.hpp"
#include "doseopt/linalg.hpp"
#include "doseopt/optimizer.hpp"
#include "doseopt/verification.hpp"
#include "support.hpp"

using namespace doseopt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

std::vector<Design> random_feasible(const ModelSpec& spec, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Design> out;
  while (static_cast<int>(out.size()) < count) {
    const Eigen::MatrixXd w =
        out.size() % 4 == 3 ? testing::sparse_random_weights(spec, rng) : testing::random_weights(spec, rng);
    const Design d = make_design(spec, w);
    if (is_feasible(d)) out.push_back(d);
  }
  return out;
}

Eigen::VectorXd latest_contrast(const ModelSpec& spec, int dose) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(spec.parameters());
  c(0) = -1;
  c(dose) = 1;
  return c;
}

fs::path workdir() {
  const fs::path d = fs::temp_directory_path() / "doseopt_acceptance";
  fs::create_directories(d);
  return d;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DOSEOPT_CLI) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void criterion1(Outcome& o) {
  double worst = 0;
  for (int n = 2; n <= 8; ++n) {
    const Design d = senn_design(n);
    const double err = std::abs(e_criterion(d) - 1.0 / (4 * n));
    worst = std::max(worst, err);
    o.require(err <= 1e-12, "e value n=" + std::to_string(n));
    const auto exact = exact_contrast_information(d);
    o.require(exact.has_value(), "exact weights n=" + std::to_string(n));
    if (!exact) continue;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        o.require((*exact)(i, j) == (i == j ? Rational(1, 4 * n) : Rational(0)), "exact N_A n=" + std::to_string(n));
      }
    }
  }
  o.detail << "max |e - 1/(4n)| = " << worst << ", N_A = I/(4n) exactly for n=2..8";
}

void criterion2(Outcome& o) {
  double worst = 0;
  for (int n = 2; n <= 8; ++n) {
    const double target = 1.0 / (4 * n);
    const double err = std::abs(e_criterion(uniformly_extended_senn(n)) - target);
    o.require(err <= 1e-10, "uniformly extended n=" + std::to_string(n));
    const DesignPolytope poly = e_optimal_class(ModelSpec(n, DesignKind::Extended));
    for (const Design& d : sample_polytope(poly, 100, 2000 + n)) {
      o.require(is_e_optimal_extended(d), "sample outside class n=" + std::to_string(n));
      const double e = std::abs(e_criterion(d) - target);
      worst = std::max(worst, e);
      o.require(e <= 1e-8, "sampled member n=" + std::to_string(n));
    }
  }
  o.detail << "700 class members, max |e - 1/(4n)| = " << worst;
}

void reference_criterion(Outcome& o, const std::string& objective, const std::string& reference) {
  const fs::path out = workdir() / ("optimize_" + objective + ".csv");
  const int code = run_cli("optimize --n 4 --kind extended --class e-optimal --objective " + objective + " --out " +
                           out.string());
  o.require(code == 0, "cli exit code " + std::to_string(code));
  if (code != 0 && code != 2) return;
  const Eigen::MatrixXd got = read_design(out).weights();
  const Eigen::MatrixXd ref = read_design(fs::path(DOSEOPT_TEST_DATA_DIR) / reference).weights();
  const double dev = max_abs(got - ref);
  o.require(dev <= 2e-3, "entrywise deviation");

  // Last row of the run log carries the final gap.
  const std::string log = read_text(out.string() + ".log.csv");
  const std::string last = log.substr(log.rfind('\n', log.size() - 2) + 1);
  const double gap = std::stod(last.substr(last.rfind(',') + 1));
  o.require(gap <= 1e-7, "final gap");
  o.detail << "max deviation " << dev << ", final gap " << gap;
}

void criterion5(Outcome& o) {
  double worst = 0;
  for (int n = 2; n <= 6; ++n) {
    for (double v : lv_variances(senn_design(n))) {
      worst = std::max(worst, std::abs(v - 4.0 * n));
    }
  }
  o.require(worst <= 1e-9, "Senn stage variances");
  double worst_h = 0;
  for (int n = 2; n <= 6; ++n) {
    worst_h = std::max(worst_h, std::abs(lv_variances(highest_dose_extended_senn(n)).back() - 2.0 * (n + 1)));
  }
  o.require(worst_h <= 1e-9, "highest-dose final stage");
  o.detail << "max |d_k - 4n| = " << worst << ", max |d_{n+1} - 2(n+1)| = " << worst_h;
}

void criterion6(Outcome& o) {
  for (int n = 2; n <= 8; ++n) o.require(std::abs(mv_criterion(senn_design(n)) - 4.0 * n) <= 1e-10, "Senn mv");
  double min_margin = 1e300;
  int lv_designs = 0;
  for (int n = 2; n <= 4; ++n) {
    for (const Design& d : random_feasible(ModelSpec(n, DesignKind::Standard), 200, 3000 + n)) {
      const double mv = mv_criterion(d);
      min_margin = std::min(min_margin, mv - 4.0 * n);
      o.require(mv >= 4.0 * n - 1e-9, "mv dominance");
      try {
        for (double v : lv_variances(d)) {
          min_margin = std::min(min_margin, v - 4.0 * n);
          o.require(v >= 4.0 * n - 1e-9, "lv dominance");
        }
        ++lv_designs;
      } catch (const StageInestimable&) {
        // A stage that cannot estimate its contrast has unbounded variance.
      }
    }
  }
  o.detail << "600 designs (" << lv_designs << " with every stage estimable), min margin over 4n = " << min_margin;
}

void criterion7(Outcome& o) {
  double worst = -1e300, lowest = 1e300;
  std::size_t vertices = 0;
  for (int n = 2; n <= 6; ++n) {
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Constant(n, n, 1.0 / n);
    for (const Design& d : {senn_design(n), uniformly_extended_senn(n)}) {
      const CertificationResult r = certify_e_optimality(d, default_ginverse(d), ones);
      o.require(r.certified() && r.worst_gap <= 1e-10, "e certificate n=" + std::to_string(n));
      o.require(r.best_gap >= -1e-10, "equality at all vertices n=" + std::to_string(n));
      worst = std::max(worst, r.worst_gap);
      lowest = std::min(lowest, r.best_gap);
      vertices += r.vertices;
    }
    for (const auto& r : certify_lv_optimality(senn_design(n))) o.require(r.certified(), "Senn " + r.claim);
    const Design h = highest_dose_extended_senn(n);
    o.require(certify_c_optimality(h, latest_contrast(h.spec(), n), default_ginverse(h)).certified(),
              "highest-dose final stage");
    for (const auto& r : certify_lv_optimality(h)) o.require(r.certified(), "highest-dose " + r.claim);
  }
  o.detail << vertices << " E vertex checks, gaps in [" << lowest << ", " << worst << "]; c claims certified";
}

void criterion8(Outcome& o) {
  const int n = 4;
  std::vector<Design> certified;
  std::vector<Design> candidates{senn_design(n), uniformly_extended_senn(n)};
  for (const Design& d : sample_polytope(e_optimal_class(ModelSpec(n, DesignKind::Extended)), 10, 8)) {
    candidates.push_back(d);
  }
  for (const Design& d : candidates) {
    if (certify_e_default(d).certified()) certified.push_back(d);
  }
  o.require(certified.size() == candidates.size(), "every class member certifies");

  double best_random = 1e300;
  for (auto kind : {DesignKind::Standard, DesignKind::Extended}) {
    const ModelSpec spec(n, kind);
    for (const Design& d : random_feasible(spec, 500, 4000 + static_cast<int>(kind))) {
      best_random = std::min(best_random, c_variance(d, average_contrast_vector(spec)));
    }
  }
  double spread = 0;
  for (const Design& d : certified) {
    const double v = avg_contrast_variance(d);
    spread = std::max(spread, std::abs(v - avg_contrast_variance(certified.front())));
    o.require(v <= best_random + 1e-8, "random design below certified");
  }
  o.detail << certified.size() << " certified designs at " << avg_contrast_variance(certified.front())
           << " (spread " << spread << "), best of 1000 random " << best_random;
}

void criterion9(Outcome& o) {
  const Eigen::Vector3d proportions(0.5, 0.25, 0.25);
  const OracleResult s = brute_force_best_e(ModelSpec(2, DesignKind::Standard), 40, 100);
  o.require(std::abs(s.value - 0.125) <= 2e-3, "standard value");
  const double ds = max_abs(s.design.weights() - senn_design(2).weights());
  o.require(ds <= 0.02, "standard argmax");
  o.require(max_abs(replication_profile(s.design).treatment - proportions) <= 0.02, "standard proportions");

  const OracleResult e = brute_force_best_e(ModelSpec(2, DesignKind::Extended), 20, 100);
  o.require(std::abs(e.value - 0.125) <= 2e-3, "extended value");
  // The extended optimum is a class; measure distance to its defining equalities.
  const Eigen::VectorXd r = replication_profile(e.design).treatment;
  double de = max_abs(r - proportions);
  for (int k = 0; k < 3; ++k) de = std::max(de, std::abs(e.design(0, k) - 1.0 / 6));
  o.require(de <= 0.02, "extended argmax");
  o.detail << "standard value " << s.value << " (argmax dev " << ds << "), extended value " << e.value
           << " (class dev " << de << ")";
}

void criterion10(Outcome& o) {
  std::mt19937_64 rng(10);
  const auto a_obj = make_a_objective();
  const auto d_obj = make_d_objective();
  double worst_rel = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const ModelSpec spec(2 + rep % 4, rep % 2 ? DesignKind::Extended : DesignKind::Standard);
    const Eigen::MatrixXd w = testing::random_weights(spec, rng);
    for (const Objective* obj : {a_obj.get(), d_obj.get()}) {
      const Eigen::MatrixXd g = obj->gradient(spec, w);
      for (int i = 1; i < spec.treatments(); ++i) {
        for (int k = 0; k < spec.cohorts(); ++k) {
          const double fd =
              testing::central_difference([&](const Eigen::MatrixXd& x) { return obj->value(spec, x); }, w, i, k);
          const double rel = std::abs(g(i, k) - fd) / std::max(1.0, std::abs(fd));
          worst_rel = std::max(worst_rel, rel);
        }
      }
    }
  }
  o.require(worst_rel <= 1e-5, "gradient check");

  double worst_rec = 0;
  int matrices = 0;
  for (int n = 2; n <= 8; ++n) {
    for (auto kind : {NamedDesignKind::Senn, NamedDesignKind::UniformlyExtendedSenn,
                      NamedDesignKind::HighestDoseExtendedSenn}) {
      const Design d = named_design(kind, n);
      for (const Eigen::MatrixXd& m : {contrast_information(d).matrix(), tau_information(d).matrix()}) {
        worst_rec = std::max(worst_rec, max_abs(symmetric_eigen(m).reconstruct() - m));
        ++matrices;
      }
    }
  }
  o.require(worst_rec <= 1e-10, "eigen reconstruction");
  o.detail << "max relative gradient error " << worst_rel << ", max reconstruction error " << worst_rec << " over "
           << matrices << " matrices";
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<void(Outcome&)> body;
  };
  const std::vector<Criterion> criteria{
      {1, "closed-form E value of the Senn design", 1, criterion1},
      {2, "E value across the extended optimal class", 10, criterion2},
      {3, "A-optimal design within the class", 60, [](Outcome& o) { reference_criterion(o, "A", "a_optimal_class_n4.csv"); }},
      {4, "D-optimal design within the class", 60, [](Outcome& o) { reference_criterion(o, "D", "d_optimal_class_n4.csv"); }},
      {5, "latest-dose stage variances", 5, criterion5},
      {6, "MV value and dominance", 30, criterion6},
      {7, "optimality certificates", 60, criterion7},
      {8, "average contrast variance is minimal", 30, criterion8},
      {9, "brute-force oracle agreement", 120, criterion9},
      {10, "numerical hygiene", 10, criterion10},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.require(secs < c.limit_s, "runtime limit");
    if (!o.pass) ++failures;
    std::printf("criterion %2d %s  %s  [%.3f s / %.0f s]  %s\n", c.id, o.pass ? "PASS" : "FAIL", c.name, secs,
                c.limit_s, o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
