#include "doseopt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "doseopt/constructors.hpp"
#include "doseopt/error.hpp"
#include "doseopt/linalg.hpp"
#include "doseopt/simplex.hpp"

namespace doseopt {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Cholesky of N_A, or nothing when it is not numerically positive definite.
std::optional<Eigen::LLT<Eigen::MatrixXd>> positive_definite(const Eigen::MatrixXd& c) {
  if (!is_feasible(c)) return std::nullopt;
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) return std::nullopt;
  return llt;
}

class AObjective final : public Objective {
 public:
  std::string name() const override { return "A"; }
  double value(const ModelSpec& spec, const Eigen::MatrixXd& w) const override {
    const auto llt = positive_definite(contrast_matrix(spec, w));
    if (!llt) return kNegInf;
    return -llt->solve(Eigen::MatrixXd::Identity(spec.doses(), spec.doses())).trace();
  }
  Eigen::MatrixXd gradient(const ModelSpec& spec, const Eigen::MatrixXd& w) const override {
    const auto llt = positive_definite(contrast_matrix(spec, w));
    if (!llt) throw SingularIterate("N_A is singular");
    const Eigen::MatrixXd inv = llt->solve(Eigen::MatrixXd::Identity(spec.doses(), spec.doses()));
    return contrast_gradient(spec, w, inv * inv);
  }
  double criterion(const ModelSpec& spec, const Eigen::MatrixXd& w) const override { return -value(spec, w); }
};

class DObjective final : public Objective {
 public:
  std::string name() const override { return "D"; }
  double value(const ModelSpec& spec, const Eigen::MatrixXd& w) const override {
    const auto llt = positive_definite(contrast_matrix(spec, w));
    if (!llt) return kNegInf;
    const Eigen::MatrixXd l = llt->matrixL();
    return 2.0 * l.diagonal().array().log().sum();
  }
  Eigen::MatrixXd gradient(const ModelSpec& spec, const Eigen::MatrixXd& w) const override {
    const auto llt = positive_definite(contrast_matrix(spec, w));
    if (!llt) throw SingularIterate("N_A is singular");
    return contrast_gradient(spec, w, llt->solve(Eigen::MatrixXd::Identity(spec.doses(), spec.doses())));
  }
};

class EObjective final : public Objective {
 public:
  explicit EObjective(double beta) : beta_(beta) {}
  std::string name() const override { return "E"; }
  double value(const ModelSpec& spec, const Eigen::MatrixXd& w) const override {
    const Eigen::MatrixXd c = contrast_matrix(spec, w);
    if (!is_feasible(c)) return kNegInf;
    const Eigen::VectorXd lambda = symmetric_eigen(c).values;
    const double lo = lambda(0);
    return lo - std::log((-beta_ * (lambda.array() - lo)).exp().sum()) / beta_;
  }
  Eigen::MatrixXd gradient(const ModelSpec& spec, const Eigen::MatrixXd& w) const override {
    const SymmetricEigen eig = symmetric_eigen(contrast_matrix(spec, w));
    Eigen::ArrayXd p = (-beta_ * (eig.values.array() - eig.min())).exp();
    p /= p.sum();
    const Eigen::MatrixXd s = eig.vectors * p.matrix().asDiagonal() * eig.vectors.transpose();
    return contrast_gradient(spec, w, s);
  }
  double criterion(const ModelSpec& spec, const Eigen::MatrixXd& w) const override {
    return symmetric_eigen(contrast_matrix(spec, w)).min();
  }
  double smoothing_bias(const ModelSpec& spec) const override { return std::log(spec.doses()) / beta_; }

 private:
  double beta_;
};

// Convex combination of atoms; the iterate is always recomputed from it.
struct ActiveSet {
  std::vector<Eigen::VectorXd> atoms;
  std::vector<double> alpha;

  Eigen::VectorXd point() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(atoms.front().size());
    for (std::size_t i = 0; i < atoms.size(); ++i) x += alpha[i] * atoms[i];
    return x;
  }

  void forward(const Eigen::VectorXd& s, double gamma) {
    if (gamma >= 1.0) {
      atoms = {s};
      alpha = {1.0};
      return;
    }
    for (double& a : alpha) a *= 1.0 - gamma;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if ((atoms[i] - s).cwiseAbs().maxCoeff() < 1e-13) {
        alpha[i] += gamma;
        return;
      }
    }
    atoms.push_back(s);
    alpha.push_back(gamma);
  }

  void away(std::size_t v, double gamma, bool drop) {
    for (double& a : alpha) a *= 1.0 + gamma;
    alpha[v] -= gamma;
    if (drop || alpha[v] <= 1e-15) {
      atoms.erase(atoms.begin() + static_cast<std::ptrdiff_t>(v));
      alpha.erase(alpha.begin() + static_cast<std::ptrdiff_t>(v));
      double total = 0;
      for (double a : alpha) total += a;
      for (double& a : alpha) a /= total;
    }
  }
};

// Largest gamma in [0, gamma_max] with nonnegative directional derivative.
double line_search(const DesignPolytope& poly, const Objective& obj, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& d, double gamma_max) {
  const ModelSpec& spec = poly.spec();
  auto slope = [&](double gamma) {
    const Eigen::MatrixXd w = poly.to_weights(x + gamma * d);
    if (!std::isfinite(obj.value(spec, w))) return kNegInf;
    return poly.to_vector(obj.gradient(spec, w)).dot(d);
  };
  if (slope(gamma_max) >= 0.0) return gamma_max;
  double lo = 0.0;
  double hi = gamma_max;
  for (int it = 0; it < 80 && hi - lo > 1e-17; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (slope(mid) >= 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

struct RunOutcome {
  ActiveSet active;
  double objective;
  double gap;
  int iterations;
  bool converged;
};

RunOutcome frank_wolfe(const DesignPolytope& poly, const Objective& obj, ActiveSet active, const SolverConfig& cfg,
                       double stopping_gap, std::vector<IterationLog>& log, int iteration_offset) {
  const ModelSpec& spec = poly.spec();
  bool away_enabled = false;
  double best_gap = std::numeric_limits<double>::infinity();
  int last_improvement = 0;
  RunOutcome out{{}, kNegInf, std::numeric_limits<double>::infinity(), 0, false};

  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    const Eigen::VectorXd x = active.point();
    const Eigen::MatrixXd w = poly.to_weights(x);
    const double f = obj.value(spec, w);
    if (!std::isfinite(f)) throw SingularIterate("iterate has singular N_A");
    const Eigen::VectorXd g = poly.to_vector(obj.gradient(spec, w));
    const Eigen::VectorXd s = poly.maximize_linear(g);
    const double gap = g.dot(s - x);
    log.push_back({iteration_offset + it, f, gap});
    out.objective = f;
    out.gap = gap;
    if (gap <= stopping_gap) {
      out.converged = true;
      break;
    }

    if (gap < 0.5 * best_gap) {
      best_gap = gap;
      last_improvement = it;
    } else if (cfg.away_steps && it - last_improvement >= cfg.stall_window) {
      away_enabled = true;
    }

    std::size_t away_atom = 0;
    double away_gap = kNegInf;
    if (away_enabled && active.atoms.size() > 1) {
      double lowest = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < active.atoms.size(); ++i) {
        const double v = g.dot(active.atoms[i]);
        if (v < lowest) {
          lowest = v;
          away_atom = i;
        }
      }
      away_gap = g.dot(x) - lowest;
    }

    const bool use_away = away_gap > gap;
    const Eigen::VectorXd d = use_away ? Eigen::VectorXd(x - active.atoms[away_atom]) : Eigen::VectorXd(s - x);
    const double gamma_max =
        use_away ? active.alpha[away_atom] / (1.0 - active.alpha[away_atom]) : 1.0;
    double gamma = 0;
    if (cfg.step_rule == StepRule::Harmonic && !use_away) {
      gamma = 2.0 / (it + 2.0);
      // Harmonic steps may land on a singular point; back off until finite.
      while (gamma > 1e-12 && !std::isfinite(obj.value(spec, poly.to_weights(x + gamma * d)))) gamma *= 0.5;
    } else {
      gamma = line_search(poly, obj, x, d, gamma_max);
    }
    if (use_away) {
      active.away(away_atom, gamma, gamma >= gamma_max);
    } else {
      active.forward(s, gamma);
    }
  }
  out.iterations = it;
  out.active = std::move(active);
  return out;
}

}  // namespace

DesignPolytope::DesignPolytope(const ModelSpec& spec) : spec_(spec) {
  const int t = spec.cohorts();
  start_ = Eigen::MatrixXd::Zero(spec.treatments(), t);
  for (int k = 0; k < t; ++k) {
    int allowed = 0;
    for (int i = 0; i < spec.treatments(); ++i) {
      if (spec.allowed(i, k)) {
        cells_.push_back({i, k});
        ++allowed;
      }
    }
    for (int i = 0; i < allowed; ++i) start_(i, k) = 1.0 / (static_cast<double>(t) * allowed);
  }
}

void DesignPolytope::add_equality(LinearEquality eq) {
  if (eq.cells.size() != eq.coefficients.size()) throw InvalidParameter("equality has mismatched cells/coefficients");
  for (const Cell& c : eq.cells) {
    if (c.treatment < 0 || c.treatment >= spec_.treatments() || c.cohort < 0 || c.cohort >= spec_.cohorts() ||
        !spec_.allowed(c.treatment, c.cohort)) {
      throw InvalidParameter("equality refers to a cell escalation forbids");
    }
  }
  extra_.push_back(std::move(eq));
}

Eigen::MatrixXd DesignPolytope::equality_matrix() const {
  const int t = spec_.cohorts();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(t + static_cast<int>(extra_.size()), dimension());
  for (std::size_t j = 0; j < cells_.size(); ++j) a(cells_[j].cohort, static_cast<int>(j)) = 1.0;
  for (std::size_t r = 0; r < extra_.size(); ++r) {
    for (std::size_t m = 0; m < extra_[r].cells.size(); ++m) {
      const auto it = std::find(cells_.begin(), cells_.end(), extra_[r].cells[m]);
      a(t + static_cast<int>(r), static_cast<int>(it - cells_.begin())) += extra_[r].coefficients[m];
    }
  }
  return a;
}

Eigen::VectorXd DesignPolytope::equality_rhs() const {
  const int t = spec_.cohorts();
  Eigen::VectorXd b(t + static_cast<int>(extra_.size()));
  b.head(t).setConstant(1.0 / t);
  for (std::size_t r = 0; r < extra_.size(); ++r) b(t + static_cast<int>(r)) = extra_[r].rhs;
  return b;
}

Eigen::VectorXd DesignPolytope::to_vector(const Eigen::MatrixXd& weights) const {
  Eigen::VectorXd x(dimension());
  for (std::size_t j = 0; j < cells_.size(); ++j) x(static_cast<int>(j)) = weights(cells_[j].treatment, cells_[j].cohort);
  return x;
}

Eigen::MatrixXd DesignPolytope::to_weights(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(spec_.treatments(), spec_.cohorts());
  for (std::size_t j = 0; j < cells_.size(); ++j) w(cells_[j].treatment, cells_[j].cohort) = x(static_cast<int>(j));
  return w;
}

bool DesignPolytope::contains(const Eigen::MatrixXd& weights, double tol) const {
  if (weights.rows() != spec_.treatments() || weights.cols() != spec_.cohorts()) return false;
  const Eigen::VectorXd x = to_vector(weights);
  if ((to_weights(x) - weights).cwiseAbs().maxCoeff() > tol) return false;
  if (x.size() > 0 && x.minCoeff() < -tol) return false;
  return (equality_matrix() * x - equality_rhs()).cwiseAbs().maxCoeff() <= tol;
}

Eigen::VectorXd DesignPolytope::maximize_linear(const Eigen::VectorXd& cost) const {
  const LpSolution sol = solve_lp({equality_matrix(), equality_rhs(), cost});
  if (sol.status == LpStatus::Infeasible) throw EmptyPolytope("design polytope is empty");
  if (sol.status == LpStatus::Unbounded) throw Error("linear subproblem unbounded over a bounded polytope");
  return sol.x;
}

void DesignPolytope::set_start(const Eigen::MatrixXd& weights) {
  if (!contains(weights)) throw InvalidParameter("start point is outside the polytope");
  start_ = weights;
}

DesignPolytope e_optimal_class(const ModelSpec& spec) {
  const int n = spec.doses();
  const int t = spec.cohorts();
  DesignPolytope poly(spec);
  for (int k = 0; k < t; ++k) poly.add_equality({{{0, k}}, {1.0}, 1.0 / (2.0 * t)});
  for (int i = 1; i <= n; ++i) {
    LinearEquality eq;
    for (int k = 0; k < t; ++k) {
      if (spec.allowed(i, k)) {
        eq.cells.push_back({i, k});
        eq.coefficients.push_back(1.0);
      }
    }
    eq.rhs = 1.0 / (2.0 * n);
    poly.add_equality(std::move(eq));
  }
  poly.set_start(spec.kind() == DesignKind::Standard ? senn_design(n).weights() : uniformly_extended_senn(n).weights());
  return poly;
}

std::vector<Design> sample_polytope(const DesignPolytope& polytope, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const int dim = static_cast<int>(polytope.dimension());
  const int vertex_count = std::max(8, 2 * dim);
  std::vector<Eigen::VectorXd> vertices;
  for (int v = 0; v < vertex_count; ++v) {
    Eigen::VectorXd cost(dim);
    for (int j = 0; j < dim; ++j) cost(j) = normal(rng);
    vertices.push_back(polytope.maximize_linear(cost));
  }
  const Eigen::VectorXd center = polytope.to_vector(polytope.start());

  std::vector<Design> out;
  out.reserve(count);
  for (int s = 0; s < count; ++s) {
    Eigen::VectorXd mix = Eigen::VectorXd::Zero(dim);
    double total = 0;
    for (const Eigen::VectorXd& v : vertices) {
      const double e = expo(rng);
      mix += e * v;
      total += e;
    }
    mix /= total;
    const double lambda = unit(rng);
    const Eigen::VectorXd x = lambda * center + (1.0 - lambda) * mix;
    out.push_back(make_design(polytope.spec(), polytope.to_weights(x)));
  }
  return out;
}

ObjectiveKind parse_objective_kind(std::string_view text) {
  if (text == "A" || text == "a") return ObjectiveKind::A;
  if (text == "D" || text == "d") return ObjectiveKind::D;
  if (text == "E" || text == "e") return ObjectiveKind::E;
  throw InvalidParameter("unknown objective '" + std::string(text) + "'");
}

std::string_view to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::A: return "A";
    case ObjectiveKind::D: return "D";
    case ObjectiveKind::E: return "E";
  }
  return "?";
}

std::unique_ptr<Objective> make_a_objective() { return std::make_unique<AObjective>(); }
std::unique_ptr<Objective> make_d_objective() { return std::make_unique<DObjective>(); }
std::unique_ptr<Objective> make_e_objective(double beta) { return std::make_unique<EObjective>(beta); }

Eigen::MatrixXd contrast_gradient(const ModelSpec& spec, const Eigen::MatrixXd& w, const Eigen::MatrixXd& s) {
  const int n = spec.doses();
  const double t = spec.cohorts();
  const Eigen::MatrixXd sz = s * w.bottomRows(n);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(w.rows(), w.cols());
  for (int k = 0; k < w.cols(); ++k) {
    for (int i = 1; i <= n; ++i) grad(i, k) = s(i - 1, i - 1) - 2.0 * t * sz(i - 1, k);
  }
  return grad;
}

namespace {

ActiveSet initial_active_set(const DesignPolytope& poly, std::uint64_t seed, std::size_t seed_index) {
  Eigen::VectorXd x = poly.to_vector(poly.start());
  if (seed_index > 0 || seed != 0) {
    const Design other = sample_polytope(poly, 1, seed).front();
    x = 0.5 * x + 0.5 * poly.to_vector(other.weights());
  }
  return {{x}, {1.0}};
}

}  // namespace

OptimizationResult maximize(const DesignPolytope& polytope, const Objective& objective, const SolverConfig& config) {
  if (config.stopping_gap <= 0) throw InvalidParameter("stopping gap must be positive");
  if (config.seeds.empty()) throw InvalidParameter("at least one seed is required");
  polytope.maximize_linear(Eigen::VectorXd::Zero(static_cast<int>(polytope.dimension())));

  std::optional<OptimizationResult> best;
  for (std::size_t si = 0; si < config.seeds.size(); ++si) {
    std::vector<IterationLog> log;
    RunOutcome run =
        frank_wolfe(polytope, objective, initial_active_set(polytope, config.seeds[si], si), config,
                    config.stopping_gap, log, 0);
    const Eigen::MatrixXd w = polytope.to_weights(run.active.point());
    OptimizationResult r{make_design(polytope.spec(), w),
                         run.objective,
                         objective.criterion(polytope.spec(), w),
                         run.gap + objective.smoothing_bias(polytope.spec()),
                         run.iterations,
                         run.converged,
                         si,
                         std::move(log),
                         std::nullopt};
    if (!best || r.objective > best->objective) best = std::move(r);
  }
  return std::move(*best);
}

OptimizationResult maximize(const DesignPolytope& polytope, ObjectiveKind kind, const SolverConfig& config) {
  if (kind == ObjectiveKind::A) return maximize(polytope, *make_a_objective(), config);
  if (kind == ObjectiveKind::D) return maximize(polytope, *make_d_objective(), config);

  if (config.stopping_gap <= 0) throw InvalidParameter("stopping gap must be positive");
  if (config.seeds.empty() || config.e_temperatures.empty()) throw InvalidParameter("empty seeds or temperatures");
  polytope.maximize_linear(Eigen::VectorXd::Zero(static_cast<int>(polytope.dimension())));
  const ModelSpec& spec = polytope.spec();
  const double scale = 4.0 * spec.doses();

  std::optional<OptimizationResult> best;
  for (std::size_t si = 0; si < config.seeds.size(); ++si) {
    ActiveSet active = initial_active_set(polytope, config.seeds[si], si);
    std::vector<IterationLog> log;
    RunOutcome run;
    std::unique_ptr<Objective> obj;
    int total = 0;
    for (std::size_t ti = 0; ti < config.e_temperatures.size(); ++ti) {
      obj = make_e_objective(config.e_temperatures[ti] * scale);
      const bool last = ti + 1 == config.e_temperatures.size();
      const double final_target = config.stopping_gap - obj->smoothing_bias(spec);
      const double target =
          last ? std::max(final_target, 0.5 * config.stopping_gap) : std::max(config.stopping_gap, 1e-3 / config.e_temperatures[ti]);
      run = frank_wolfe(polytope, *obj, std::move(active), config, target, log, total);
      total += run.iterations;
      active = run.active;
    }
    const Eigen::MatrixXd w = polytope.to_weights(run.active.point());
    Design design = make_design(spec, w);
    const double gap = run.gap + obj->smoothing_bias(spec);
    OptimizationResult r{design, run.objective, obj->criterion(spec, w), gap, total,
                         run.converged && gap <= config.stopping_gap, si, std::move(log), std::nullopt};
    if (is_feasible(design) && spec.doses() <= 8) r.e_certificate = certify_e_default(design);
    if (!best || r.criterion > best->criterion) best = std::move(r);
  }
  return std::move(*best);
}

}  // namespace doseopt
