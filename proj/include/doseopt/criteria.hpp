#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "doseopt/design.hpp"

namespace doseopt {

// All variances are reported per unit sigma^2 / N, i.e. on the c^T M^- c scale.

double e_criterion(const Design& d);   // lambda_min(N_A), larger is better
double a_criterion(const Design& d);   // trace(N_A^-1)
double d_criterion(const Design& d);   // log det(N_A), larger is better
double mv_criterion(const Design& d);  // max_i (N_A^-1)_ii

/// c^T M^+ c for a coefficient vector over (tau, mu, theta). Throws
/// InestimableFunctional when c is outside the range of M.
double c_variance(const Design& d, const Eigen::VectorXd& c);
double c_variance(const Eigen::MatrixXd& moment, const Eigen::VectorXd& c);

/// (-1, 1_n^T / n, 0_{t+1}^T)^T
Eigen::VectorXd average_contrast_vector(const ModelSpec& spec);

/// Variance of the averaged dose-minus-placebo estimator, 1^T N_A^-1 1 / n^2.
double avg_contrast_variance(const Design& d);

/// Coefficient vector of tau_dose - tau_0 over the full parameter vector.
Eigen::VectorXd dose_contrast_vector(const ModelSpec& spec, int dose);

/// Trials of the first `stage` cohorts only; later cohorts are zeroed, not
/// renormalised, so the total mass is stage / t.
struct StageDesign {
  ModelSpec spec;
  int stage;  // 1-based
  Eigen::MatrixXd weights;

  double mass() const { return weights.sum(); }
};

StageDesign stage_design(const Design& d, int stage);

/// Latest-dose variances d_k for k = 1..n. Extended designs get one more
/// entry: the variance of tau_n - tau_0 from the whole study.
std::vector<double> lv_variances(const Design& d);

struct CriterionReport {
  double e_value = 0;
  double a_value = 0;
  double d_value = 0;
  double mv_value = 0;
  double avg_contrast_variance = 0;
  /// Empty when some stage contrast is not estimable.
  std::optional<std::vector<double>> lv_values;
};

/// Throws InfeasibleDesign when N_A is singular.
CriterionReport evaluate(const Design& d);

}  // namespace doseopt
