#include "doseopt/design.hpp"

#include <cmath>
#include <string>

#include "doseopt/error.hpp"
#include "doseopt/linalg.hpp"

namespace doseopt {

std::string_view to_string(DesignKind kind) {
  return kind == DesignKind::Standard ? "standard" : "extended";
}

DesignKind parse_design_kind(std::string_view text) {
  if (text == "standard") return DesignKind::Standard;
  if (text == "extended") return DesignKind::Extended;
  throw ParseError("unknown design kind '" + std::string(text) + "'");
}

ModelSpec::ModelSpec(int doses, DesignKind kind) : n_(doses), kind_(kind) {
  if (doses < 2) throw InvalidParameter("dose count must be at least 2, got " + std::to_string(doses));
}

void check_design_constraints(const ModelSpec& spec, const Eigen::MatrixXd& w) {
  using Kind = ConstraintViolation::Kind;
  const int rows = spec.treatments();
  const int cols = spec.cohorts();
  if (w.rows() != rows || w.cols() != cols) {
    throw ConstraintViolation(Kind::Shape, static_cast<int>(w.rows()), static_cast<int>(w.cols()), 0.0);
  }
  for (int k = 0; k < cols; ++k) {
    for (int i = 0; i < rows; ++i) {
      const double v = w(i, k);
      if (!std::isfinite(v) || v < -kWeightTolerance) throw ConstraintViolation(Kind::Negative, i, k, v);
      if (!spec.allowed(i, k) && std::abs(v) > kWeightTolerance) {
        throw ConstraintViolation(Kind::Escalation, i, k, v);
      }
    }
  }
  const double total = w.sum() - 1.0;
  if (std::abs(total) > kWeightTolerance) throw ConstraintViolation(Kind::Total, -1, -1, total);
  const double cohort_size = 1.0 / cols;
  for (int k = 0; k < cols; ++k) {
    const double gap = w.col(k).sum() - cohort_size;
    if (std::abs(gap) > kWeightTolerance) throw ConstraintViolation(Kind::CohortSize, -1, k, gap);
  }
}

Design make_design(const ModelSpec& spec, const Eigen::MatrixXd& weights) {
  check_design_constraints(spec, weights);
  return Design(spec, weights, std::nullopt);
}

Design make_design(const ModelSpec& spec, const RationalMatrix& weights) {
  Eigen::MatrixXd w(weights.rows(), weights.cols());
  for (int i = 0; i < weights.rows(); ++i) {
    for (int k = 0; k < weights.cols(); ++k) w(i, k) = to_double(weights(i, k));
  }
  check_design_constraints(spec, w);
  return Design(spec, std::move(w), weights);
}

ReplicationProfile replication_profile(const Design& d) {
  return {d.weights().rowwise().sum(), d.weights().colwise().sum().transpose()};
}

ContrastSystem contrast_system(const ModelSpec& spec) {
  const int n = spec.doses();
  ContrastSystem sys{n, Eigen::MatrixXd::Zero(n + 1, n), Eigen::MatrixXd::Zero(spec.parameters(), n)};
  sys.q.row(0).setConstant(-1.0);
  sys.q.bottomRows(n).setIdentity();
  sys.a.topRows(n + 1) = sys.q;
  return sys;
}

Eigen::MatrixXd moment_matrix(const ModelSpec& spec, const Eigen::MatrixXd& w) {
  const int n = spec.doses();
  const int t = spec.cohorts();
  const int mu = n + 1;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(spec.parameters(), spec.parameters());
  for (int i = 0; i <= n; ++i) {
    for (int k = 0; k < t; ++k) {
      const double v = w(i, k);
      if (v == 0.0) continue;
      const int idx[3] = {i, mu, mu + 1 + k};
      for (int a : idx) {
        for (int b : idx) m(a, b) += v;
      }
    }
  }
  return m;
}

Eigen::MatrixXd moment_matrix(const Design& d) { return moment_matrix(d.spec(), d.weights()); }

TauInformation tau_information(const Design& d) {
  const auto& x = d.weights();
  const double t = d.spec().cohorts();
  Eigen::MatrixXd m = -t * x * x.transpose();
  m.diagonal() += x.rowwise().sum();
  return TauInformation(std::move(m));
}

Eigen::MatrixXd contrast_matrix(const ModelSpec& spec, const Eigen::MatrixXd& w) {
  const int n = spec.doses();
  const double t = spec.cohorts();
  const auto z = w.bottomRows(n);
  Eigen::MatrixXd c = -t * z * z.transpose();
  c.diagonal() += z.rowwise().sum();
  return c;
}

ContrastInformation contrast_information(const Design& d) {
  return ContrastInformation(contrast_matrix(d.spec(), d.weights()));
}

std::optional<RationalMatrix> exact_contrast_information(const Design& d) {
  if (!d.exact_weights()) return std::nullopt;
  const RationalMatrix& x = *d.exact_weights();
  const int n = d.spec().doses();
  const int t = d.spec().cohorts();
  RationalMatrix c(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Rational cross(0);
      for (int k = 0; k < t; ++k) cross += x(i + 1, k) * x(j + 1, k);
      c(i, j) = -Rational(t) * cross;
    }
    for (int k = 0; k < t; ++k) c(i, i) += x(i + 1, k);
  }
  return c;
}

bool is_feasible(const Eigen::MatrixXd& contrast) {
  const double trace = contrast.trace();
  if (!(trace > 0.0)) return false;
  return symmetric_eigen(contrast).min() > 1e-10 * trace;
}

bool is_feasible(const Design& d) { return is_feasible(contrast_information(d).matrix()); }

}  // namespace doseopt
