#include "doseopt/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "doseopt/criteria.hpp"
#include "doseopt/error.hpp"
#include "doseopt/linalg.hpp"

namespace doseopt {

namespace {

constexpr double kGInverseTolerance = 1e-8;

Eigen::MatrixXd assemble_block_ginverse(const Eigen::MatrixXd& m, int treatments, const Eigen::MatrixXd& tau_g,
                                        const Eigen::MatrixXd& m22_g) {
  const int rest = static_cast<int>(m.rows()) - treatments;
  const Eigen::MatrixXd m11 = m.topLeftCorner(treatments, treatments);
  const Eigen::MatrixXd m12 = m.topRightCorner(treatments, rest);
  const Eigen::MatrixXd m22 = m.bottomRightCorner(rest, rest);

  if (!is_generalized_inverse(m22, m22_g, kGInverseTolerance)) throw NotAGInverse("M_22 block is not a g-inverse");
  const Eigen::MatrixXd m_tau = m11 - m12 * m22_g * m12.transpose();
  if (!is_generalized_inverse(m_tau, tau_g, kGInverseTolerance)) {
    throw NotAGInverse("M_tau block is not a g-inverse");
  }

  const Eigen::MatrixXd upper_right = -tau_g * m12 * m22_g;
  Eigen::MatrixXd g(m.rows(), m.cols());
  g.topLeftCorner(treatments, treatments) = tau_g;
  g.topRightCorner(treatments, rest) = upper_right;
  g.bottomLeftCorner(rest, treatments) = -m22_g * m12.transpose() * tau_g;
  g.bottomRightCorner(rest, rest) = m22_g - m22_g * m12.transpose() * upper_right;
  if (!is_generalized_inverse(m, g, kGInverseTolerance)) throw NotAGInverse("assembled G is not a g-inverse of M");
  return g;
}

struct Scan {
  double max = -std::numeric_limits<double>::infinity();
  double min = std::numeric_limits<double>::infinity();
  std::size_t argmax = 0;
};

// cell[k][j]: contribution of cohort k choosing treatment j.
Scan scan_vertices(const VertexSet& vs, const std::vector<std::vector<double>>& cell) {
  const int cohorts = vs.cohorts();
  std::vector<int> idx(cohorts, 0);
  std::vector<double> prefix(cohorts + 1, 0.0);
  for (int k = 0; k < cohorts; ++k) prefix[k + 1] = prefix[k] + cell[k][0];

  Scan s;
  for (std::size_t v = 0; v < vs.size(); ++v) {
    const double total = prefix[cohorts];
    if (total > s.max) {
      s.max = total;
      s.argmax = v;
    }
    s.min = std::min(s.min, total);

    int j = cohorts - 1;
    while (j >= 0) {
      if (++idx[j] < static_cast<int>(cell[j].size())) break;
      idx[j] = 0;
      --j;
    }
    if (j < 0) break;
    for (int k = j; k < cohorts; ++k) prefix[k + 1] = prefix[k] + cell[k][idx[k]];
  }
  return s;
}

// Per-cell values f^T W f / t for the cohorts the vertex set varies.
std::vector<std::vector<double>> cell_values(const VertexSet& vs, const Eigen::MatrixXd& w) {
  const ModelSpec& spec = vs.spec();
  const int n = spec.doses();
  const int mu = n + 1;
  const double t = spec.cohorts();
  std::vector<std::vector<double>> out(vs.cohorts());
  for (int k = 0; k < vs.cohorts(); ++k) {
    const int theta = mu + 1 + k;
    for (int i = 0; i <= n; ++i) {
      if (!spec.allowed(i, k)) break;
      const double q = w(i, i) + w(mu, mu) + w(theta, theta) + w(i, mu) + w(mu, i) + w(i, theta) + w(theta, i) +
                       w(mu, theta) + w(theta, mu);
      out[k].push_back(q / t);
    }
  }
  return out;
}

CertificationResult scan_claim(std::string claim, const VertexSet& vs, const Eigen::MatrixXd& w, double bound,
                               double tolerance) {
  const Scan s = scan_vertices(vs, cell_values(vs, w));
  CertificationResult r;
  r.claim = std::move(claim);
  r.bound = bound;
  r.worst_gap = s.max - bound;
  r.best_gap = s.min - bound;
  r.vertices = vs.size();
  r.witness_vertex_index = s.argmax;
  r.witness_choices = vs.choices(s.argmax);
  r.status = r.worst_gap <= tolerance ? CertificationStatus::Certified : CertificationStatus::Violated;
  return r;
}

Eigen::MatrixXd require_feasible_contrast(const Design& d) {
  Eigen::MatrixXd c = contrast_information(d).matrix();
  if (!is_feasible(c)) throw InfeasibleDesign("dose-versus-placebo contrasts are not estimable");
  return c;
}

double lambda_min_score(const ModelSpec& spec, const Eigen::MatrixXd& w) {
  const Eigen::MatrixXd c = contrast_matrix(spec, w);
  if (!is_feasible(c)) return -std::numeric_limits<double>::infinity();
  return symmetric_eigen(c).min();
}

}  // namespace

GInverseBlocks contrast_blocks(const Design& d) {
  const int n = d.spec().doses();
  const int t = d.spec().cohorts();
  const Eigen::MatrixXd c = require_feasible_contrast(d);
  GInverseBlocks blocks{Eigen::MatrixXd::Zero(n + 1, n + 1), Eigen::MatrixXd::Zero(t + 1, t + 1)};
  blocks.tau.bottomRightCorner(n, n) = c.llt().solve(Eigen::MatrixXd::Identity(n, n));
  blocks.nuisance.bottomRightCorner(t, t) = Eigen::MatrixXd::Identity(t, t) * static_cast<double>(t);
  return blocks;
}

GeneralizedInverse block_generalized_inverse(const Design& d, const Eigen::MatrixXd& m_tau_ginv,
                                             const Eigen::MatrixXd& m22_ginv) {
  const int nt = d.spec().treatments();
  const int rest = d.spec().cohorts() + 1;
  if (m_tau_ginv.rows() != nt || m_tau_ginv.cols() != nt) throw NotAGInverse("M_tau block has the wrong shape");
  if (m22_ginv.rows() != rest || m22_ginv.cols() != rest) throw NotAGInverse("M_22 block has the wrong shape");
  return {assemble_block_ginverse(moment_matrix(d), nt, m_tau_ginv, m22_ginv), GInverseConstruction::BlockFormula};
}

GeneralizedInverse moore_penrose_ginverse(const Design& d) {
  return {pseudo_inverse(moment_matrix(d)), GInverseConstruction::MoorePenrose};
}

GeneralizedInverse default_ginverse(const Design& d) {
  if (!is_feasible(d)) return moore_penrose_ginverse(d);
  const GInverseBlocks b = contrast_blocks(d);
  return block_generalized_inverse(d, b.tau, b.nuisance);
}

VertexSet::VertexSet(const ModelSpec& spec, int cohort_limit) : spec_(spec), size_(1) {
  const int t = spec.cohorts();
  const int limit = cohort_limit < 0 ? t : std::min(cohort_limit, t);
  for (int k = 0; k < limit; ++k) {
    int allowed = 0;
    for (int i = 0; i <= spec.doses(); ++i) allowed += spec.allowed(i, k) ? 1 : 0;
    radix_.push_back(allowed);
    if (size_ > kMaxVertices / static_cast<std::size_t>(allowed)) {
      throw TooLarge("vertex count exceeds " + std::to_string(kMaxVertices));
    }
    size_ *= static_cast<std::size_t>(allowed);
  }
}

std::vector<int> VertexSet::choices(std::size_t index) const {
  std::vector<int> out(radix_.size());
  for (int k = static_cast<int>(radix_.size()) - 1; k >= 0; --k) {
    out[k] = static_cast<int>(index % static_cast<std::size_t>(radix_[k]));
    index /= static_cast<std::size_t>(radix_[k]);
  }
  return out;
}

Eigen::MatrixXd VertexSet::weights(std::size_t index) const {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(spec_.treatments(), spec_.cohorts());
  const std::vector<int> c = choices(index);
  for (std::size_t k = 0; k < c.size(); ++k) w(c[k], static_cast<int>(k)) = 1.0 / spec_.cohorts();
  return w;
}

Design VertexSet::vertex(std::size_t index) const {
  if (cohorts() != spec_.cohorts()) throw InvalidParameter("partial vertex sets do not hold proper designs");
  return make_design(spec_, weights(index));
}

VertexSet enumerate_vertices(const ModelSpec& spec) { return VertexSet(spec); }

Eigen::MatrixXd c_normality_matrix(const GeneralizedInverse& g, const Eigen::VectorXd& c) {
  const Eigen::VectorXd u = g.g * c;
  return u * u.transpose();
}

Eigen::MatrixXd e_normality_matrix(const Design& d, const GeneralizedInverse& g, const Eigen::MatrixXd& e_weight) {
  const Eigen::MatrixXd na = contrast_information(d).matrix();
  const Eigen::MatrixXd ga = g.g * contrast_system(d.spec()).a;
  return ga * na * e_weight * na * ga.transpose();
}

double normality_lhs(const Eigen::MatrixXd& w, const Eigen::MatrixXd& competitor_moment) {
  return competitor_moment.cwiseProduct(w.transpose()).sum();
}

CertificationResult certify_c_optimality(const Design& d, const Eigen::VectorXd& c, const GeneralizedInverse& g,
                                         double tolerance) {
  const double bound = c_variance(d, c);
  if (!is_generalized_inverse(moment_matrix(d), g.g, kGInverseTolerance)) {
    throw NotAGInverse("supplied G is not a g-inverse of M");
  }
  const VertexSet vs(d.spec());
  return scan_claim("c", vs, c_normality_matrix(g, c), bound, tolerance);
}

CertificationResult certify_e_optimality(const Design& d, const GeneralizedInverse& g,
                                         const Eigen::MatrixXd& e_weight, double tolerance) {
  const int n = d.spec().doses();
  if (e_weight.rows() != n || e_weight.cols() != n) throw InvalidWeightMatrix("E must be n x n");
  if ((e_weight - e_weight.transpose()).cwiseAbs().maxCoeff() > 1e-10) throw InvalidWeightMatrix("E is not symmetric");
  if (std::abs(e_weight.trace() - 1.0) > 1e-10) throw InvalidWeightMatrix("E does not have unit trace");
  if (symmetric_eigen(e_weight).min() < -1e-10) throw InvalidWeightMatrix("E is not nonnegative definite");
  const Eigen::MatrixXd na = require_feasible_contrast(d);
  if (!is_generalized_inverse(moment_matrix(d), g.g, kGInverseTolerance)) {
    throw NotAGInverse("supplied G is not a g-inverse of M");
  }
  const double bound = symmetric_eigen(na).min();
  const VertexSet vs(d.spec());
  return scan_claim("e", vs, e_normality_matrix(d, g, e_weight), bound, tolerance);
}

CertificationResult certify_e_default(const Design& d, double tolerance) {
  const int n = d.spec().doses();
  const SymmetricEigen eig = symmetric_eigen(require_feasible_contrast(d));
  const bool repeated = eig.values(1) - eig.min() <= 1e-8 * std::abs(eig.min()) + 1e-14;

  std::vector<Eigen::MatrixXd> weights;
  if (repeated) weights.push_back(Eigen::MatrixXd::Constant(n, n, 1.0 / n));
  const Eigen::VectorXd h = eig.vectors.col(0);
  weights.push_back(h * h.transpose());

  std::optional<CertificationResult> best;
  for (const GeneralizedInverse& g : {default_ginverse(d), moore_penrose_ginverse(d)}) {
    for (const Eigen::MatrixXd& e : weights) {
      CertificationResult r = certify_e_optimality(d, g, e, tolerance);
      if (r.certified()) return r;
      if (!best || r.worst_gap < best->worst_gap) best = std::move(r);
    }
  }
  return *best;
}

CertificationResult certify_lv_stage(const Design& d, int stage, double tolerance) {
  const ModelSpec& spec = d.spec();
  const int n = spec.doses();
  const int t = spec.cohorts();
  const StageDesign sd = stage_design(d, stage);
  const int dose = std::min(stage, n);
  const int active_doses = std::min(stage, n);

  const Eigen::MatrixXd m = moment_matrix(spec, sd.weights);
  const Eigen::VectorXd c = dose_contrast_vector(spec, dose);
  double bound = 0;
  try {
    bound = c_variance(m, c);
  } catch (const InestimableFunctional&) {
    throw StageInestimable(stage);
  }

  // Block g-inverse restricted to the treatments and cohorts the stage uses.
  Eigen::MatrixXd m22_g = Eigen::MatrixXd::Zero(t + 1, t + 1);
  for (int k = 1; k <= stage; ++k) m22_g(k, k) = t;
  const auto& x = sd.weights;
  Eigen::MatrixXd m_tau = -static_cast<double>(t) * x * x.transpose();
  m_tau.diagonal() += x.rowwise().sum();
  const Eigen::MatrixXd active = m_tau.block(1, 1, active_doses, active_doses);
  if (!is_feasible(active)) throw StageInestimable(stage);
  Eigen::MatrixXd tau_g = Eigen::MatrixXd::Zero(n + 1, n + 1);
  tau_g.block(1, 1, active_doses, active_doses) =
      active.llt().solve(Eigen::MatrixXd::Identity(active_doses, active_doses));

  const GeneralizedInverse g{assemble_block_ginverse(m, spec.treatments(), tau_g, m22_g),
                             GInverseConstruction::BlockFormula};
  const VertexSet vs(spec, stage);
  return scan_claim("lv:" + std::to_string(stage), vs, c_normality_matrix(g, c), bound, tolerance);
}

std::vector<CertificationResult> certify_lv_optimality(const Design& d, double tolerance) {
  std::vector<CertificationResult> out;
  const int stages = d.spec().cohorts();
  for (int k = 1; k <= stages; ++k) out.push_back(certify_lv_stage(d, k, tolerance));
  return out;
}

OracleResult brute_force_best(const ModelSpec& spec, const WeightScore& score, int grid_resolution,
                              int refine_iters) {
  if (spec.doses() > 3) throw TooLarge("brute-force oracle supports at most 3 doses");
  if (grid_resolution < 1) throw InvalidParameter("grid resolution must be positive");
  const int t = spec.cohorts();
  const int n = spec.doses();

  // Compositions of grid_resolution into `parts` nonnegative parts.
  auto compositions = [&](int parts) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(parts, 0);
    std::function<void(int, int)> rec = [&](int pos, int left) {
      if (pos == parts - 1) {
        cur[pos] = left;
        out.push_back(cur);
        return;
      }
      for (int v = left; v >= 0; --v) {
        cur[pos] = v;
        rec(pos + 1, left - v);
      }
    };
    rec(0, grid_resolution);
    return out;
  };

  std::vector<std::vector<std::vector<int>>> grids;
  std::vector<std::vector<int>> allowed(t);
  double count = 1;
  for (int k = 0; k < t; ++k) {
    for (int i = 0; i <= n; ++i) {
      if (spec.allowed(i, k)) allowed[k].push_back(i);
    }
    grids.push_back(compositions(static_cast<int>(allowed[k].size())));
    count *= static_cast<double>(grids.back().size());
  }
  if (count > 5e7) throw TooLarge("oracle grid has more than 5e7 points");

  const double unit = 1.0 / (static_cast<double>(t) * grid_resolution);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n + 1, t);
  auto set_cohort = [&](int k, const std::vector<int>& parts) {
    for (std::size_t j = 0; j < parts.size(); ++j) w(allowed[k][j], k) = parts[j] * unit;
  };

  std::vector<std::size_t> idx(t, 0);
  for (int k = 0; k < t; ++k) set_cohort(k, grids[k][0]);
  Eigen::MatrixXd best_w = w;
  double best = -std::numeric_limits<double>::infinity();
  std::size_t evaluated = 0;
  while (true) {
    const double v = score(w);
    ++evaluated;
    if (v > best) {
      best = v;
      best_w = w;
    }
    int j = t - 1;
    while (j >= 0) {
      if (++idx[j] < grids[j].size()) break;
      idx[j] = 0;
      set_cohort(j, grids[j][0]);
      --j;
    }
    if (j < 0) break;
    set_cohort(j, grids[j][idx[j]]);
  }

  // Pairwise transfers within a cohort, step halving each round.
  w = best_w;
  double step = unit / 2;
  for (int round = 0; round < refine_iters; ++round, step /= 2) {
    for (int pass = 0; pass < 100; ++pass) {
      bool improved = false;
      for (int k = 0; k < t; ++k) {
        for (int from : allowed[k]) {
          for (int to : allowed[k]) {
            if (from == to || w(from, k) <= 0.0) continue;
            const double amount = std::min(step, w(from, k));
            w(from, k) -= amount;
            w(to, k) += amount;
            const double v = score(w);
            ++evaluated;
            if (v > best + 1e-15) {
              best = v;
              improved = true;
            } else {
              w(from, k) += amount;
              w(to, k) -= amount;
            }
          }
        }
      }
      if (!improved) break;
    }
  }
  return {make_design(spec, w), best, evaluated};
}

OracleResult brute_force_best_e(const ModelSpec& spec, int grid_resolution, int refine_iters) {
  return brute_force_best(
      spec, [&spec](const Eigen::MatrixXd& w) { return lambda_min_score(spec, w); }, grid_resolution, refine_iters);
}

OracleResult brute_force_best_lv(const ModelSpec& spec, int stage, int grid_resolution, int refine_iters) {
  const int t = spec.cohorts();
  if (stage < 1 || stage > t) throw InvalidStage("stage " + std::to_string(stage) + " outside 1.." + std::to_string(t));
  const Eigen::VectorXd c = dose_contrast_vector(spec, std::min(stage, spec.doses()));
  auto score = [&](const Eigen::MatrixXd& w) {
    Eigen::MatrixXd sw = w;
    sw.rightCols(t - stage).setZero();
    try {
      return -c_variance(moment_matrix(spec, sw), c);
    } catch (const InestimableFunctional&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  OracleResult r = brute_force_best(spec, score, grid_resolution, refine_iters);
  r.value = -r.value;
  return r;
}

}  // namespace doseopt
