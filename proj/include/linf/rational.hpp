#pragma once

#include <compare>
#include <string>
#include <string_view>

#include <gmpxx.h>

namespace linf {

using Rational = mpq_class;

/// Parses "p/q", "p" or a finite decimal such as "-0.125" exactly.
/// Throws Error(Parse) on anything else.
Rational parse_rational(std::string_view text);

/// num/den in canonical form (mpq_class(num, den) alone is not reduced).
Rational ratio(long num, long den);

std::string to_string(const Rational& q);
double to_double(const Rational& q);

/// base^exponent; a negative exponent requires a nonzero base.
Rational pow(const Rational& base, long exponent);

Rational floor(const Rational& q);
Rational ceil(const Rational& q);
Rational abs(const Rational& q);

/// Nonnegative extended rational: a finite value >= 0 or +inf.
/// Measures and truncation levels live here; 0 * inf = 0.
class Extended {
 public:
  Extended() = default;
  Extended(const Rational& value);  // NOLINT(google-explicit-constructor)
  Extended(long value) : Extended(Rational(value)) {}  // NOLINT

  static Extended infinity();

  bool is_infinite() const { return infinite_; }
  bool is_zero() const { return !infinite_ && sgn(value_) == 0; }
  /// Precondition: finite.
  const Rational& value() const;
  double to_double() const;
  std::string str() const;

  friend Extended operator+(const Extended& a, const Extended& b);
  friend Extended operator*(const Extended& a, const Extended& b);
  friend bool operator==(const Extended& a, const Extended& b);
  friend std::strong_ordering operator<=>(const Extended& a, const Extended& b);

 private:
  Rational value_{0};
  bool infinite_ = false;
};

/// Accepts "inf", "+inf", "infinity" or a nonnegative rational.
Extended parse_extended(std::string_view text);

}  // namespace linf
