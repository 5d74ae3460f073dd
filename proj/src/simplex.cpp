#include "doseopt/simplex.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace doseopt {

namespace {

constexpr double kPivotEps = 1e-11;

struct Tableau {
  Eigen::MatrixXd t;        // constraint rows; last column is the right-hand side
  Eigen::RowVectorXd cost;  // reduced costs; last entry is -objective
  std::vector<int> basis;

  int rhs() const { return static_cast<int>(t.cols()) - 1; }

  void pivot(int row, int col) {
    t.row(row) /= t(row, col);
    for (int i = 0; i < t.rows(); ++i) {
      if (i != row && t(i, col) != 0.0) t.row(i) -= t(i, col) * t.row(row);
    }
    cost -= cost(col) * t.row(row);
    basis[row] = col;
  }

  void remove_row(int row) {
    const int m = static_cast<int>(t.rows());
    if (row < m - 1) t.block(row, 0, m - 1 - row, t.cols()) = t.block(row + 1, 0, m - 1 - row, t.cols()).eval();
    t.conservativeResize(m - 1, Eigen::NoChange);
    basis.erase(basis.begin() + row);
  }

  // Maximises over columns [0, usable). Returns false when unbounded.
  bool run(int usable) {
    while (true) {
      int enter = -1;
      for (int j = 0; j < usable; ++j) {
        if (cost(j) > kPivotEps) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < t.rows(); ++i) {
        if (t(i, enter) <= kPivotEps) continue;
        const double ratio = t(i, rhs()) / t(i, enter);
        if (ratio < best - 1e-14 || (std::abs(ratio - best) <= 1e-14 && basis[i] < basis[leave])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  }
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp) {
  const int m = static_cast<int>(lp.a.rows());
  const int nv = static_cast<int>(lp.a.cols());

  Tableau tab;
  tab.t = Eigen::MatrixXd::Zero(m, nv + m + 1);
  tab.basis.resize(m);
  for (int i = 0; i < m; ++i) {
    const double sign = lp.b(i) < 0 ? -1.0 : 1.0;
    tab.t.row(i).head(nv) = sign * lp.a.row(i);
    tab.t(i, nv + i) = 1.0;
    tab.t(i, nv + m) = sign * lp.b(i);
    tab.basis[i] = nv + i;
  }

  // Phase one: maximise minus the sum of artificials.
  tab.cost = Eigen::RowVectorXd::Zero(nv + m + 1);
  for (int i = 0; i < m; ++i) {
    tab.cost.head(nv) += tab.t.row(i).head(nv);
    tab.cost(nv + m) += tab.t(i, nv + m);
  }
  tab.run(nv + m);
  if (tab.cost(nv + m) > 1e-9) return {LpStatus::Infeasible, {}, 0.0};

  for (int i = 0; i < static_cast<int>(tab.t.rows());) {
    if (tab.basis[i] < nv) {
      ++i;
      continue;
    }
    int col = -1;
    for (int j = 0; j < nv; ++j) {
      if (std::abs(tab.t(i, j)) > 1e-9) {
        col = j;
        break;
      }
    }
    if (col < 0) {
      tab.remove_row(i);
    } else {
      tab.pivot(i, col);
      ++i;
    }
  }

  // Phase two.
  tab.cost = Eigen::RowVectorXd::Zero(nv + m + 1);
  tab.cost.head(nv) = lp.c.transpose();
  for (int i = 0; i < static_cast<int>(tab.t.rows()); ++i) {
    const double cb = lp.c(tab.basis[i]);
    if (cb != 0.0) tab.cost -= cb * tab.t.row(i);
  }
  if (!tab.run(nv)) return {LpStatus::Unbounded, {}, 0.0};

  Eigen::VectorXd x = Eigen::VectorXd::Zero(nv);
  for (int i = 0; i < static_cast<int>(tab.t.rows()); ++i) {
    const double v = tab.t(i, nv + m);
    x(tab.basis[i]) = std::abs(v) < 1e-13 ? 0.0 : v;
  }
  return {LpStatus::Optimal, x, lp.c.dot(x)};
}

}  // namespace doseopt
