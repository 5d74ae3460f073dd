#include "doseopt/constructors.hpp"

#include <cmath>
#include <string>

#include "doseopt/error.hpp"

namespace doseopt {

namespace {

void require_doses(int n) {
  if (n < 2) throw InvalidParameter("dose count must be at least 2, got " + std::to_string(n));
}

// Senn cells of the first n cohorts with the given weight.
void fill_senn_cohorts(RationalMatrix& x, int n, Rational w) {
  for (int k = 0; k < n; ++k) {
    x(0, k) = w;
    x(k + 1, k) = w;
  }
}

}  // namespace

std::string_view to_string(NamedDesignKind kind) {
  switch (kind) {
    case NamedDesignKind::Senn: return "senn";
    case NamedDesignKind::UniformlyExtendedSenn: return "uniform-extended";
    case NamedDesignKind::HighestDoseExtendedSenn: return "highest-dose-extended";
  }
  return "unknown";
}

NamedDesignKind parse_named_design(std::string_view text) {
  if (text == "senn") return NamedDesignKind::Senn;
  if (text == "uniform-extended") return NamedDesignKind::UniformlyExtendedSenn;
  if (text == "highest-dose-extended") return NamedDesignKind::HighestDoseExtendedSenn;
  throw InvalidParameter("unknown design name '" + std::string(text) + "'");
}

DesignKind design_kind_of(NamedDesignKind kind) {
  return kind == NamedDesignKind::Senn ? DesignKind::Standard : DesignKind::Extended;
}

Design senn_design(int n) {
  require_doses(n);
  const ModelSpec spec(n, DesignKind::Standard);
  RationalMatrix x(n + 1, n);
  fill_senn_cohorts(x, n, Rational(1, 2 * n));
  return make_design(spec, x);
}

Design uniformly_extended_senn(int n) {
  require_doses(n);
  const ModelSpec spec(n, DesignKind::Extended);
  const int t = n + 1;
  RationalMatrix x(n + 1, t);
  fill_senn_cohorts(x, n, Rational(1, 2 * t));
  x(0, n) = Rational(1, 2 * t);
  for (int i = 1; i <= n; ++i) x(i, n) = Rational(1, 2 * n * t);
  return make_design(spec, x);
}

Design highest_dose_extended_senn(int n) {
  require_doses(n);
  const ModelSpec spec(n, DesignKind::Extended);
  const int t = n + 1;
  RationalMatrix x(n + 1, t);
  fill_senn_cohorts(x, n, Rational(1, 2 * t));
  x(0, n) = Rational(1, 2 * t);
  x(n, n) = Rational(1, 2 * t);
  return make_design(spec, x);
}

Design named_design(NamedDesignKind kind, int n) {
  switch (kind) {
    case NamedDesignKind::Senn: return senn_design(n);
    case NamedDesignKind::UniformlyExtendedSenn: return uniformly_extended_senn(n);
    case NamedDesignKind::HighestDoseExtendedSenn: return highest_dose_extended_senn(n);
  }
  throw InvalidParameter("unknown design kind");
}

bool is_e_optimal_standard(const Design& d) {
  if (d.spec().kind() != DesignKind::Standard) throw WrongKind("is_e_optimal_standard needs a standard design");
  const Design senn = senn_design(d.spec().doses());
  return (d.weights() - senn.weights()).cwiseAbs().maxCoeff() <= kWeightTolerance;
}

bool is_e_optimal_extended(const Design& d) {
  if (d.spec().kind() != DesignKind::Extended) throw WrongKind("is_e_optimal_extended needs an extended design");
  const int n = d.spec().doses();
  const double t = d.spec().cohorts();
  const auto& x = d.weights();
  for (int k = 0; k < x.cols(); ++k) {
    if (std::abs(x(0, k) - 1.0 / (2.0 * t)) > kWeightTolerance) return false;
  }
  for (int i = 1; i <= n; ++i) {
    if (std::abs(x.row(i).sum() - 1.0 / (2.0 * n)) > kWeightTolerance) return false;
  }
  return true;
}

}  // namespace doseopt
