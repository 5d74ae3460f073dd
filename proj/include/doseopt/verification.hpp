#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "doseopt/design.hpp"

namespace doseopt {

enum class GInverseConstruction { BlockFormula, MoorePenrose };

/// A generalized inverse G of the full moment matrix: M G M = M.
struct GeneralizedInverse {
  Eigen::MatrixXd g;
  GInverseConstruction construction;
};

/// g-inverses of the two diagonal blocks used by the block formula.
struct GInverseBlocks {
  Eigen::MatrixXd tau;       // of M_tau, order n+1
  Eigen::MatrixXd nuisance;  // of M_22, order t+1
};

/// [[0, 0], [0, N_A^-1]] for M_tau and [[0, 0], [0, t I_t]] for M_22. For the
/// Senn design these are [[0,0],[0,4n I]] and [[0,0],[0,n I]].
GInverseBlocks contrast_blocks(const Design& d);

/// G = [[Mt-, -Mt- M12 M22-], [-M22- M12^T Mt-, M22- + M22- M12^T Mt- M12 M22-]].
/// Throws NotAGInverse when either block, or the assembled G, fails
/// the defining property within 1e-8.
GeneralizedInverse block_generalized_inverse(const Design& d, const Eigen::MatrixXd& m_tau_ginv,
                                             const Eigen::MatrixXd& m22_ginv);

GeneralizedInverse moore_penrose_ginverse(const Design& d);

/// Block formula with contrast_blocks() when the design is feasible,
/// Moore-Penrose otherwise.
GeneralizedInverse default_ginverse(const Design& d);

/// Extreme points of the design polytope: every cohort puts its whole mass
/// 1/t on one allowed treatment. Vertices are indexed in mixed radix with
/// cohort 1 most significant and treatments in increasing order.
class VertexSet {
 public:
  static constexpr std::size_t kMaxVertices = 10'000'000;

  /// Only the first `cohort_limit` cohorts vary; the rest stay empty.
  /// Negative means all cohorts. Throws TooLarge above kMaxVertices.
  explicit VertexSet(const ModelSpec& spec, int cohort_limit = -1);

  const ModelSpec& spec() const noexcept { return spec_; }
  std::size_t size() const noexcept { return size_; }
  int cohorts() const noexcept { return static_cast<int>(radix_.size()); }
  /// Treatment taken by each varying cohort.
  std::vector<int> choices(std::size_t index) const;
  /// Vertex weights; only a proper design when all cohorts vary.
  Eigen::MatrixXd weights(std::size_t index) const;
  Design vertex(std::size_t index) const;

 private:
  ModelSpec spec_;
  std::vector<int> radix_;
  std::size_t size_;
};

VertexSet enumerate_vertices(const ModelSpec& spec);

enum class CertificationStatus { Certified, Violated };

struct CertificationResult {
  std::string claim;
  CertificationStatus status = CertificationStatus::Violated;
  /// max over vertices of (normality LHS - bound)
  double worst_gap = 0;
  /// min over vertices of (normality LHS - bound); zero together with
  /// worst_gap means equality at every vertex.
  double best_gap = 0;
  double bound = 0;
  std::size_t vertices = 0;
  /// Vertex attaining worst_gap, lowest index on ties.
  std::size_t witness_vertex_index = 0;
  std::vector<int> witness_choices;

  bool certified() const noexcept { return status == CertificationStatus::Certified; }
};

inline constexpr double kCertificationTolerance = 1e-8;

/// Matrix W with c^T G^T M~ G c = tr(M~ W).
Eigen::MatrixXd c_normality_matrix(const GeneralizedInverse& g, const Eigen::VectorXd& c);

/// Matrix W with tr(M~ G A N_A E N_A A^T G^T) = tr(M~ W).
Eigen::MatrixXd e_normality_matrix(const Design& d, const GeneralizedInverse& g, const Eigen::MatrixXd& e_weight);

/// tr(competitor * w).
double normality_lhs(const Eigen::MatrixXd& w, const Eigen::MatrixXd& competitor_moment);

/// Checks c^T G^T M(v) G c <= c^T M^- c at every vertex v.
CertificationResult certify_c_optimality(const Design& d, const Eigen::VectorXd& c, const GeneralizedInverse& g,
                                         double tolerance = kCertificationTolerance);

/// Checks tr(M(v) G A N_A E N_A A^T G^T) <= lambda_min(N_A) at every vertex.
/// e_weight must be n x n, PSD and of unit trace (InvalidWeightMatrix).
CertificationResult certify_e_optimality(const Design& d, const GeneralizedInverse& g,
                                         const Eigen::MatrixXd& e_weight,
                                         double tolerance = kCertificationTolerance);

/// default_ginverse() with E = 1 1^T / n when lambda_min is repeated, then
/// E = h h^T for the unit eigenvector h of lambda_min. Falls back to the
/// Moore-Penrose G if the block formula does not certify.
CertificationResult certify_e_default(const Design& d, double tolerance = kCertificationTolerance);

/// c-optimality of the stage-k latest contrast against every stage-k design,
/// using the block g-inverse of the stage moment matrix. Stage n+1 of an
/// extended design is the whole study with contrast tau_n - tau_0.
CertificationResult certify_lv_stage(const Design& d, int stage, double tolerance = kCertificationTolerance);

/// One certificate per stage, as in lv_variances().
std::vector<CertificationResult> certify_lv_optimality(const Design& d, double tolerance = kCertificationTolerance);

/// Score to maximise over raw weights; -infinity marks an infeasible point.
using WeightScore = std::function<double(const Eigen::MatrixXd&)>;

struct OracleResult {
  Design design;
  double value;
  std::size_t evaluated;
};

/// Exhaustive search over per-cohort simplex grids with spacing
/// 1 / (t * resolution), followed by deterministic pairwise mass transfers
/// with halving step. Requires n <= 3; TooLarge beyond 5e7 grid points.
OracleResult brute_force_best(const ModelSpec& spec, const WeightScore& score, int grid_resolution,
                              int refine_iters);

/// Maximises lambda_min(N_A).
OracleResult brute_force_best_e(const ModelSpec& spec, int grid_resolution, int refine_iters);

/// Minimises the stage-k latest variance d_k; the reported value is d_k.
OracleResult brute_force_best_lv(const ModelSpec& spec, int stage, int grid_resolution, int refine_iters);

}  // namespace doseopt
