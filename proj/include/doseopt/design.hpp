#pragma once

#include <optional>
#include <string_view>

#include <Eigen/Dense>

#include "doseopt/rational.hpp"

namespace doseopt {

enum class DesignKind { Standard, Extended };

std::string_view to_string(DesignKind kind);
DesignKind parse_design_kind(std::string_view text);

/// Number of doses and whether an extra unconstrained cohort is appended.
class ModelSpec {
 public:
  ModelSpec(int doses, DesignKind kind);

  int doses() const noexcept { return n_; }
  DesignKind kind() const noexcept { return kind_; }
  int cohorts() const noexcept { return kind_ == DesignKind::Standard ? n_ : n_ + 1; }
  int treatments() const noexcept { return n_ + 1; }
  /// Order of the full moment matrix: treatments, constant, cohorts.
  int parameters() const noexcept { return n_ + cohorts() + 2; }

  /// Treatment i (0 = placebo) may appear in 0-based cohort k.
  bool allowed(int treatment, int cohort) const noexcept {
    return cohort >= n_ || treatment <= cohort + 1;
  }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;

 private:
  int n_;
  DesignKind kind_;
};

inline constexpr double kWeightTolerance = 1e-9;

/// Validated approximate design. Rows are treatments (0 = placebo), columns
/// are cohorts; both 0-based. Immutable after construction.
class Design {
 public:
  const ModelSpec& spec() const noexcept { return spec_; }
  const Eigen::MatrixXd& weights() const noexcept { return weights_; }
  /// Present when the design was built from fractions.
  const std::optional<RationalMatrix>& exact_weights() const noexcept { return exact_; }

  double operator()(int treatment, int cohort) const { return weights_(treatment, cohort); }

 private:
  Design(ModelSpec spec, Eigen::MatrixXd weights, std::optional<RationalMatrix> exact)
      : spec_(spec), weights_(std::move(weights)), exact_(std::move(exact)) {}

  friend Design make_design(const ModelSpec&, const Eigen::MatrixXd&);
  friend Design make_design(const ModelSpec&, const RationalMatrix&);

  ModelSpec spec_;
  Eigen::MatrixXd weights_;
  std::optional<RationalMatrix> exact_;
};

/// Throws ConstraintViolation when nonnegativity, total mass, escalation
/// or equal cohort sizes fail beyond kWeightTolerance.
Design make_design(const ModelSpec& spec, const Eigen::MatrixXd& weights);
Design make_design(const ModelSpec& spec, const RationalMatrix& weights);

/// Same checks as make_design without constructing anything.
void check_design_constraints(const ModelSpec& spec, const Eigen::MatrixXd& weights);

struct ReplicationProfile {
  Eigen::VectorXd treatment;  // r
  Eigen::VectorXd cohort;     // s
};

ReplicationProfile replication_profile(const Design& d);

/// Dose-versus-placebo contrasts: Q^T = (-1_n, I_n), A^T = (Q^T, 0).
struct ContrastSystem {
  int doses;
  Eigen::MatrixXd q;
  Eigen::MatrixXd a;
};

ContrastSystem contrast_system(const ModelSpec& spec);

/// Sum of w(i,k) f(i,k) f(i,k)^T with f(i,k) = (e_i, 1, e_k). The weights
/// need not be a proper design; the constant-term entry is the total mass.
Eigen::MatrixXd moment_matrix(const ModelSpec& spec, const Eigen::MatrixXd& weights);
Eigen::MatrixXd moment_matrix(const Design& d);

/// Schur complement of the nuisance block: diag(r) - t X X^T.
class TauInformation {
 public:
  explicit TauInformation(Eigen::MatrixXd m) : m_(std::move(m)) {}

  const Eigen::MatrixXd& matrix() const noexcept { return m_; }
  double alpha() const { return m_(0, 0); }
  Eigen::VectorXd b() const { return m_.col(0).tail(m_.rows() - 1); }
  Eigen::MatrixXd c() const { return m_.bottomRightCorner(m_.rows() - 1, m_.cols() - 1); }

 private:
  Eigen::MatrixXd m_;
};

TauInformation tau_information(const Design& d);

/// N_A = diag(r_1..r_n) - t Z Z^T.
class ContrastInformation {
 public:
  explicit ContrastInformation(Eigen::MatrixXd m) : m_(std::move(m)) {}
  const Eigen::MatrixXd& matrix() const noexcept { return m_; }

 private:
  Eigen::MatrixXd m_;
};

ContrastInformation contrast_information(const Design& d);

/// N_A in exact arithmetic; empty unless the design carries fractions.
std::optional<RationalMatrix> exact_contrast_information(const Design& d);

/// diag(r_1..r_n) - t Z Z^T for an arbitrary weight matrix. No validation;
/// used by the optimizer and by finite-difference checks.
Eigen::MatrixXd contrast_matrix(const ModelSpec& spec, const Eigen::MatrixXd& weights);

/// Smallest eigenvalue of N_A exceeds 1e-10 * trace(N_A).
bool is_feasible(const Design& d);
bool is_feasible(const Eigen::MatrixXd& contrast);

}  // namespace doseopt
