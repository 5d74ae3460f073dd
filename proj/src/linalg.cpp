#include "doseopt/linalg.hpp"

#include <algorithm>

namespace doseopt {

SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, double rel_cutoff) {
  const SymmetricEigen eig = symmetric_eigen(m);
  const double top = std::max(std::abs(eig.min()), std::abs(eig.max()));
  const double cutoff = rel_cutoff * top;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(eig.values.size());
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    if (eig.values(i) > cutoff) inv(i) = 1.0 / eig.values(i);
  }
  return eig.vectors * inv.asDiagonal() * eig.vectors.transpose();
}

bool is_generalized_inverse(const Eigen::MatrixXd& m, const Eigen::MatrixXd& g, double tol) {
  if (g.rows() != m.cols() || g.cols() != m.rows()) return false;
  return (m * g * m - m).cwiseAbs().maxCoeff() <= tol;
}

double range_residual(const Eigen::MatrixXd& m, const Eigen::MatrixXd& m_pinv, const Eigen::VectorXd& c) {
  return (c - m * (m_pinv * c)).norm();
}

}  // namespace doseopt
