#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "doseopt/design.hpp"
#include "doseopt/verification.hpp"

namespace doseopt {

/// Treatment and cohort of a weight cell, both 0-based.
struct Cell {
  int treatment;
  int cohort;
  friend bool operator==(const Cell&, const Cell&) = default;
};

struct LinearEquality {
  std::vector<Cell> cells;
  std::vector<double> coefficients;
  double rhs = 0;
};

/// Feasible weight matrices as a polytope over the cells escalation allows:
/// cohort sums equal 1/t plus optional extra equalities.
class DesignPolytope {
 public:
  explicit DesignPolytope(const ModelSpec& spec);

  const ModelSpec& spec() const noexcept { return spec_; }
  const std::vector<Cell>& cells() const noexcept { return cells_; }
  const std::vector<LinearEquality>& extra_equalities() const noexcept { return extra_; }
  std::size_t dimension() const noexcept { return cells_.size(); }

  /// Throws InvalidParameter for cells escalation forbids.
  void add_equality(LinearEquality eq);

  Eigen::MatrixXd equality_matrix() const;
  Eigen::VectorXd equality_rhs() const;

  Eigen::VectorXd to_vector(const Eigen::MatrixXd& weights) const;
  Eigen::MatrixXd to_weights(const Eigen::VectorXd& x) const;

  bool contains(const Eigen::MatrixXd& weights, double tol = 1e-9) const;

  /// Basic feasible solution maximising cost^T x. Throws EmptyPolytope.
  Eigen::VectorXd maximize_linear(const Eigen::VectorXd& cost) const;

  /// Preferred starting point; the per-cohort barycenter unless set.
  const Eigen::MatrixXd& start() const noexcept { return start_; }
  /// Throws InvalidParameter when the point is outside the polytope.
  void set_start(const Eigen::MatrixXd& weights);

 private:
  ModelSpec spec_;
  std::vector<Cell> cells_;
  std::vector<LinearEquality> extra_;
  Eigen::MatrixXd start_;
};

/// Base polytope intersected with: placebo weight 1/(2t) in every cohort and
/// every dose replicated 1/(2n). For standard designs the only point left is
/// the Senn design.
DesignPolytope e_optimal_class(const ModelSpec& spec);

/// Random points of the polytope: convex combinations of random LP vertices
/// and the start point. Deterministic in seed.
std::vector<Design> sample_polytope(const DesignPolytope& polytope, int count, std::uint64_t seed);

/// Concave objective over raw weights. value() is -infinity wherever N_A
/// is singular.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual std::string name() const = 0;
  virtual double value(const ModelSpec& spec, const Eigen::MatrixXd& weights) const = 0;
  virtual Eigen::MatrixXd gradient(const ModelSpec& spec, const Eigen::MatrixXd& weights) const = 0;
  /// Criterion reported to the user; the optimised value by default.
  virtual double criterion(const ModelSpec& spec, const Eigen::MatrixXd& weights) const {
    return value(spec, weights);
  }
  /// Upper bound on criterion lost to smoothing.
  virtual double smoothing_bias(const ModelSpec&) const { return 0.0; }
};

enum class ObjectiveKind { A, D, E };

ObjectiveKind parse_objective_kind(std::string_view text);
std::string_view to_string(ObjectiveKind kind);

/// -trace(N_A^-1); criterion() reports trace(N_A^-1).
std::unique_ptr<Objective> make_a_objective();
/// log det N_A.
std::unique_ptr<Objective> make_d_objective();
/// Soft-min of the eigenvalues of N_A at inverse temperature beta;
/// criterion() reports lambda_min.
std::unique_ptr<Objective> make_e_objective(double beta);

/// Gradient of G(N_A) with respect to every weight, for dG = tr(S dN_A).
Eigen::MatrixXd contrast_gradient(const ModelSpec& spec, const Eigen::MatrixXd& weights, const Eigen::MatrixXd& s);

enum class StepRule { ExactLineSearch, Harmonic };

struct SolverConfig {
  int max_iters = 200000;
  double stopping_gap = 1e-7;
  StepRule step_rule = StepRule::ExactLineSearch;
  std::vector<std::uint64_t> seeds{0};
  /// Away steps once the plain Frank-Wolfe gap stalls.
  bool away_steps = true;
  int stall_window = 50;
  /// Inverse temperatures for the E objective, multiplied by 4n.
  std::vector<double> e_temperatures{1e2, 1e3, 1e4, 1e5, 1e6, 1e7};
};

struct IterationLog {
  int iteration;
  double objective;
  double gap;
};

struct OptimizationResult {
  Design design;
  double objective;  // optimised (possibly smoothed) value
  double criterion;  // user-facing criterion value
  double gap;        // Frank-Wolfe gap plus smoothing bias
  int iterations;
  bool converged;
  std::size_t seed_index;
  std::vector<IterationLog> log;
  /// E runs only: normality check of the final iterate.
  std::optional<CertificationResult> e_certificate;
};

/// Frank-Wolfe with exact LP subproblems and optional away steps. Throws
/// EmptyPolytope, SingularIterate when a start point has singular N_A.
OptimizationResult maximize(const DesignPolytope& polytope, const Objective& objective, const SolverConfig& config);

/// A and D directly; E by continuation over config.e_temperatures.
OptimizationResult maximize(const DesignPolytope& polytope, ObjectiveKind kind, const SolverConfig& config);

}  // namespace doseopt
