#pragma once

#include <string_view>

#include "doseopt/design.hpp"

namespace doseopt {

enum class NamedDesignKind { Senn, UniformlyExtendedSenn, HighestDoseExtendedSenn };

/// CLI names: "senn", "uniform-extended", "highest-dose-extended".
std::string_view to_string(NamedDesignKind kind);
NamedDesignKind parse_named_design(std::string_view text);
DesignKind design_kind_of(NamedDesignKind kind);

/// Half of each cohort on placebo, half on the highest dose allowed in it.
Design senn_design(int n);

/// Senn design over the first n cohorts (scaled to t = n+1); the extra
/// cohort puts 1/(2t) on placebo and 1/(2nt) on every dose.
Design uniformly_extended_senn(int n);

/// Senn design over the first n cohorts; the extra cohort repeats the
/// placebo / dose n split of cohort n.
Design highest_dose_extended_senn(int n);

Design named_design(NamedDesignKind kind, int n);

/// The Senn design is the only E-optimal standard design.
bool is_e_optimal_standard(const Design& d);

/// Placebo row constant at 1/(2t) and every dose replicated 1/(2n).
bool is_e_optimal_extended(const Design& d);

}  // namespace doseopt
