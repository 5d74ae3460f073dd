#pragma once

#include <Eigen/Dense>

namespace doseopt {

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
struct SymmetricEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;

  double min() const { return values(0); }
  double max() const { return values(values.size() - 1); }
  Eigen::MatrixXd reconstruct() const { return vectors * values.asDiagonal() * vectors.transpose(); }
};

SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& m);

/// Moore-Penrose inverse of a symmetric PSD matrix. Eigenvalues at or
/// below rel_cutoff * lambda_max are treated as zero.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, double rel_cutoff = 1e-12);

/// max |M G M - M| <= tol.
bool is_generalized_inverse(const Eigen::MatrixXd& m, const Eigen::MatrixXd& g, double tol = 1e-8);

/// || (I - M M^+) c || for a symmetric M.
double range_residual(const Eigen::MatrixXd& m, const Eigen::MatrixXd& m_pinv, const Eigen::VectorXd& c);

}  // namespace doseopt
