#include "doseopt/error.hpp"

#include <sstream>

namespace doseopt {

namespace {

std::string describe(ConstraintViolation::Kind kind, int row, int col, double magnitude) {
  std::ostringstream os;
  os << "constraint violation (" << to_string(kind) << ")";
  if (row >= 0) os << " at treatment " << row;
  if (col >= 0) os << " cohort " << col + 1;
  os << ": magnitude " << magnitude;
  return os.str();
}

}  // namespace

const char* to_string(ConstraintViolation::Kind kind) {
  switch (kind) {
    case ConstraintViolation::Kind::Shape: return "shape";
    case ConstraintViolation::Kind::Negative: return "nonnegativity";
    case ConstraintViolation::Kind::Total: return "total mass";
    case ConstraintViolation::Kind::Escalation: return "escalation";
    case ConstraintViolation::Kind::CohortSize: return "cohort size";
  }
  return "unknown";
}

ConstraintViolation::ConstraintViolation(Kind kind, int row, int col, double magnitude)
    : Error(describe(kind, row, col, magnitude)), kind_(kind), row_(row), col_(col), magnitude_(magnitude) {}

StageInestimable::StageInestimable(int stage)
    : Error("latest contrast is not estimable at stage " + std::to_string(stage)), stage_(stage) {}

}  // namespace doseopt
