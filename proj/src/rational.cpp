#include "doseopt/rational.hpp"

#include <charconv>

#include "doseopt/error.hpp"

namespace doseopt {

namespace {

std::int64_t parse_int(std::string_view text, std::string_view whole) {
  std::int64_t value = 0;
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError("not a fraction: '" + std::string(whole) + "'");
  }
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  const std::string_view s = trim(text);
  const auto slash = s.find('/');
  if (slash == std::string_view::npos) return Rational(parse_int(s, text));
  const std::int64_t num = parse_int(trim(s.substr(0, slash)), text);
  const std::int64_t den = parse_int(trim(s.substr(slash + 1)), text);
  if (den == 0) throw ParseError("zero denominator in '" + std::string(text) + "'");
  return Rational(num, den);
}

std::string format_rational(const Rational& q) {
  if (q.denominator() == 1) return std::to_string(q.numerator());
  return std::to_string(q.numerator()) + "/" + std::to_string(q.denominator());
}

}  // namespace doseopt
