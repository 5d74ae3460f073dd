#pragma once

#include <optional>

#include <Eigen/Dense>

namespace doseopt {

/// max c^T x  subject to  A x = b, x >= 0.
struct LinearProgram {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
  LpStatus status;
  Eigen::VectorXd x;  // basic feasible solution when Optimal
  double value = 0;
};

/// Dense two-phase simplex with Bland's rule. Redundant equality rows are
/// tolerated. Intended for a few hundred variables at most.
LpSolution solve_lp(const LinearProgram& lp);

}  // namespace doseopt
