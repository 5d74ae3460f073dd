#include "doseopt/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "doseopt/error.hpp"
#include "doseopt/linalg.hpp"

namespace doseopt {

namespace {

constexpr double kRangeTolerance = 1e-8;

Eigen::MatrixXd feasible_contrast(const Design& d) {
  Eigen::MatrixXd c = contrast_information(d).matrix();
  if (!is_feasible(c)) throw InfeasibleDesign("dose-versus-placebo contrasts are not estimable");
  return c;
}

Eigen::MatrixXd contrast_inverse(const Design& d) {
  const Eigen::MatrixXd c = feasible_contrast(d);
  return c.llt().solve(Eigen::MatrixXd::Identity(c.rows(), c.cols()));
}

double stage_variance(const ModelSpec& spec, const Eigen::MatrixXd& weights, int dose, int stage) {
  const Eigen::MatrixXd m = moment_matrix(spec, weights);
  const Eigen::MatrixXd g = pseudo_inverse(m);
  const Eigen::VectorXd c = dose_contrast_vector(spec, dose);
  if (range_residual(m, g, c) >= kRangeTolerance) throw StageInestimable(stage);
  return c.dot(g * c);
}

}  // namespace

double e_criterion(const Design& d) { return symmetric_eigen(feasible_contrast(d)).min(); }

double a_criterion(const Design& d) { return contrast_inverse(d).trace(); }

double d_criterion(const Design& d) {
  const Eigen::LLT<Eigen::MatrixXd> llt(feasible_contrast(d));
  const Eigen::MatrixXd l = llt.matrixL();
  return 2.0 * l.diagonal().array().log().sum();
}

double mv_criterion(const Design& d) { return contrast_inverse(d).diagonal().maxCoeff(); }

double c_variance(const Eigen::MatrixXd& moment, const Eigen::VectorXd& c) {
  if (c.size() != moment.rows()) {
    throw InvalidParameter("coefficient vector has length " + std::to_string(c.size()) + ", expected " +
                           std::to_string(moment.rows()));
  }
  const Eigen::MatrixXd g = pseudo_inverse(moment);
  const double residual = range_residual(moment, g, c);
  if (residual >= kRangeTolerance) {
    throw InestimableFunctional("c is outside the range of the moment matrix (residual " +
                                std::to_string(residual) + ")");
  }
  return c.dot(g * c);
}

double c_variance(const Design& d, const Eigen::VectorXd& c) { return c_variance(moment_matrix(d), c); }

Eigen::VectorXd average_contrast_vector(const ModelSpec& spec) {
  const int n = spec.doses();
  Eigen::VectorXd c = Eigen::VectorXd::Zero(spec.parameters());
  c(0) = -1.0;
  c.segment(1, n).setConstant(1.0 / n);
  return c;
}

double avg_contrast_variance(const Design& d) {
  const Eigen::MatrixXd inv = contrast_inverse(d);
  const double n = d.spec().doses();
  return inv.sum() / (n * n);
}

Eigen::VectorXd dose_contrast_vector(const ModelSpec& spec, int dose) {
  if (dose < 1 || dose > spec.doses()) throw InvalidParameter("dose index out of range: " + std::to_string(dose));
  Eigen::VectorXd c = Eigen::VectorXd::Zero(spec.parameters());
  c(0) = -1.0;
  c(dose) = 1.0;
  return c;
}

StageDesign stage_design(const Design& d, int stage) {
  const int t = d.spec().cohorts();
  if (stage < 1 || stage > t) {
    throw InvalidStage("stage " + std::to_string(stage) + " outside 1.." + std::to_string(t));
  }
  Eigen::MatrixXd w = d.weights();
  w.rightCols(t - stage).setZero();
  return {d.spec(), stage, std::move(w)};
}

std::vector<double> lv_variances(const Design& d) {
  const ModelSpec& spec = d.spec();
  const int n = spec.doses();
  std::vector<double> out;
  out.reserve(spec.cohorts());
  for (int k = 1; k <= n; ++k) {
    out.push_back(stage_variance(spec, stage_design(d, k).weights, k, k));
  }
  if (spec.kind() == DesignKind::Extended) out.push_back(stage_variance(spec, d.weights(), n, n + 1));
  return out;
}

CriterionReport evaluate(const Design& d) {
  const Eigen::MatrixXd c = feasible_contrast(d);
  const Eigen::MatrixXd inv = c.llt().solve(Eigen::MatrixXd::Identity(c.rows(), c.cols()));
  const double n = d.spec().doses();
  CriterionReport report;
  report.e_value = symmetric_eigen(c).min();
  report.a_value = inv.trace();
  report.d_value = d_criterion(d);
  report.mv_value = inv.diagonal().maxCoeff();
  report.avg_contrast_variance = inv.sum() / (n * n);
  try {
    report.lv_values = lv_variances(d);
  } catch (const StageInestimable&) {
    report.lv_values.reset();
  }
  return report;
}

}  // namespace doseopt
