#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <boost/rational.hpp>

namespace doseopt {

using Rational = boost::rational<std::int64_t>;

/// Dense row-major matrix of exact fractions.
class RationalMatrix {
 public:
  RationalMatrix() = default;
  RationalMatrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols) {}

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }

  Rational& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
  const Rational& operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

  friend bool operator==(const RationalMatrix&, const RationalMatrix&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Rational> data_;
};

inline double to_double(const Rational& q) {
  return static_cast<double>(q.numerator()) / static_cast<double>(q.denominator());
}

/// "p/q" or an integer; anything else is rejected with ParseError.
Rational parse_rational(std::string_view text);

/// "p/q", or "p" when the denominator is one.
std::string format_rational(const Rational& q);

}  // namespace doseopt
