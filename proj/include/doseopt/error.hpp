#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace doseopt {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// A weight matrix breaks one of the design constraints.
class ConstraintViolation : public Error {
 public:
  enum class Kind { Shape, Negative, Total, Escalation, CohortSize };

  ConstraintViolation(Kind kind, int row, int col, double magnitude);

  Kind kind() const noexcept { return kind_; }
  /// 0-based treatment index, or -1 when the violation is not cell-specific.
  int row() const noexcept { return row_; }
  /// 0-based cohort index, or -1.
  int col() const noexcept { return col_; }
  double magnitude() const noexcept { return magnitude_; }

 private:
  Kind kind_;
  int row_;
  int col_;
  double magnitude_;
};

const char* to_string(ConstraintViolation::Kind kind);

class WrongKind : public Error {
 public:
  using Error::Error;
};

class InfeasibleDesign : public Error {
 public:
  using Error::Error;
};

class InestimableFunctional : public Error {
 public:
  using Error::Error;
};

class InvalidStage : public Error {
 public:
  using Error::Error;
};

class StageInestimable : public Error {
 public:
  explicit StageInestimable(int stage);
  /// 1-based stage index.
  int stage() const noexcept { return stage_; }

 private:
  int stage_;
};

class NotAGInverse : public Error {
 public:
  using Error::Error;
};

class TooLarge : public Error {
 public:
  using Error::Error;
};

class InvalidWeightMatrix : public Error {
 public:
  using Error::Error;
};

class EmptyPolytope : public Error {
 public:
  using Error::Error;
};

class SingularIterate : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IOError : public Error {
 public:
  using Error::Error;
};

}  // namespace doseopt
