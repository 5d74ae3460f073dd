#pragma once

// Test-only oracles, kept independent of the library's own formulas.

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "doseopt/design.hpp"

namespace testing {

using doseopt::Design;
using doseopt::DesignKind;
using doseopt::ModelSpec;

inline std::filesystem::path data_dir() { return DOSEOPT_TEST_DATA_DIR; }

// Every allowed cell gets a positive share of its cohort, so N_A is almost
// surely nonsingular.
inline Eigen::MatrixXd random_weights(const ModelSpec& spec, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  const int t = spec.cohorts();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(spec.treatments(), t);
  for (int k = 0; k < t; ++k) {
    double total = 0;
    for (int i = 0; i < spec.treatments(); ++i) {
      if (spec.allowed(i, k)) total += (w(i, k) = expo(rng) + 1e-3);
    }
    w.col(k) /= total * t;
  }
  return w;
}

inline Design random_design(const ModelSpec& spec, std::mt19937_64& rng) {
  return doseopt::make_design(spec, random_weights(spec, rng));
}

// Sparse variant: each cohort uses a random subset of its allowed cells.
// May be infeasible; callers filter.
inline Eigen::MatrixXd sparse_random_weights(const ModelSpec& spec, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(0.5);
  std::exponential_distribution<double> expo(1.0);
  const int t = spec.cohorts();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(spec.treatments(), t);
  for (int k = 0; k < t; ++k) {
    double total = 0;
    std::vector<int> allowed;
    for (int i = 0; i < spec.treatments(); ++i) {
      if (spec.allowed(i, k)) allowed.push_back(i);
    }
    for (int i : allowed) {
      if (keep(rng)) total += (w(i, k) = expo(rng));
    }
    if (total == 0) {
      w(allowed[std::uniform_int_distribution<int>(0, static_cast<int>(allowed.size()) - 1)(rng)], k) = 1.0;
      total = 1.0;
    }
    w.col(k) /= total * t;
  }
  return w;
}

// Moment matrix straight from the regression vectors f(i,k) = (e_i, 1, e_k).
inline Eigen::MatrixXd moment_from_regressors(const ModelSpec& spec, const Eigen::MatrixXd& w, double mu_entry = -1) {
  const int n1 = spec.treatments();
  const int t = spec.cohorts();
  const int p = n1 + 1 + t;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < n1; ++i) {
    for (int k = 0; k < t; ++k) {
      if (w(i, k) == 0) continue;
      Eigen::VectorXd f = Eigen::VectorXd::Zero(p);
      f(i) = 1;
      f(n1) = 1;
      f(n1 + 1 + k) = 1;
      m += w(i, k) * f * f.transpose();
    }
  }
  if (mu_entry >= 0) m(n1, n1) = mu_entry;
  return m;
}

// Pseudoinverse through SVD, independent of the library's eigen route.
inline Eigen::MatrixXd svd_pinv(const Eigen::MatrixXd& m, double rel = 1e-12) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd s = svd.singularValues();
  const double cut = rel * (s.size() ? s(0) : 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  for (int i = 0; i < s.size(); ++i) {
    if (s(i) > cut) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

// Schur complement of the nuisance block (mu and cohorts) in the full
// moment matrix.
inline Eigen::MatrixXd schur_tau(const Eigen::MatrixXd& m, int treatments) {
  const int rest = static_cast<int>(m.rows()) - treatments;
  const Eigen::MatrixXd m11 = m.topLeftCorner(treatments, treatments);
  const Eigen::MatrixXd m12 = m.topRightCorner(treatments, rest);
  const Eigen::MatrixXd m22 = m.bottomRightCorner(rest, rest);
  return m11 - m12 * svd_pinv(m22) * m12.transpose();
}

// Eigenvalues of a symmetric 2x2 or 3x3 matrix from its characteristic
// polynomial, ascending.
inline std::vector<double> char_poly_roots(const Eigen::MatrixXd& a) {
  std::vector<double> r;
  if (a.rows() == 1) {
    r.push_back(a(0, 0));
  } else if (a.rows() == 2) {
    const double tr = a.trace();
    const double det = a.determinant();
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4 - det));
    r = {tr / 2 - disc, tr / 2 + disc};
  } else if (a.rows() == 3) {
    // lambda^3 - c2 lambda^2 + c1 lambda - c0, trigonometric form.
    const double c2 = a.trace();
    const double c1 = a(0, 0) * a(1, 1) + a(0, 0) * a(2, 2) + a(1, 1) * a(2, 2) - a(0, 1) * a(1, 0) -
                      a(0, 2) * a(2, 0) - a(1, 2) * a(2, 1);
    const double c0 = a.determinant();
    const double shift = c2 / 3;
    const double p = c1 - c2 * c2 / 3;
    const double q = -2 * c2 * c2 * c2 / 27 + c2 * c1 / 3 - c0;
    if (std::abs(p) < 1e-300) {
      r = {shift, shift, shift};
    } else {
      const double m = 2 * std::sqrt(-p / 3);
      const double arg = std::clamp(3 * q / (p * m), -1.0, 1.0);
      const double theta = std::acos(arg) / 3;
      for (int j = 0; j < 3; ++j) r.push_back(shift + m * std::cos(theta - 2 * std::numbers::pi * j / 3));
    }
  }
  std::sort(r.begin(), r.end());
  return r;
}

template <class F>
double central_difference(F&& f, const Eigen::MatrixXd& w, int i, int k, double h = 1e-6) {
  Eigen::MatrixXd plus = w, minus = w;
  plus(i, k) += h;
  minus(i, k) -= h;
  return (f(plus) - f(minus)) / (2 * h);
}

inline std::vector<ModelSpec> specs(int from, int to) {
  std::vector<ModelSpec> out;
  for (int n = from; n <= to; ++n) {
    out.emplace_back(n, DesignKind::Standard);
    out.emplace_back(n, DesignKind::Extended);
  }
  return out;
}

}  // namespace testing
