#include "linf/rational.hpp"

#include <cctype>
#include <cmath>

#include "linf/error.hpp"

namespace linf {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain: return "DomainError";
    case ErrorKind::SeriesNotSummable: return "SeriesNotSummable";
    case ErrorKind::NotFinitelyCellCoverable: return "NotFinitelyCellCoverable";
    case ErrorKind::SampleOutsideOverlap: return "SampleOutsideOverlap";
    case ErrorKind::FormNotExact: return "FormNotExact";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::UnknownSupport: return "UnknownSupport";
    case ErrorKind::SplitUnsupported: return "SplitUnsupported";
    case ErrorKind::Parse: return "ParseError";
  }
  return "Error";
}

namespace {

[[noreturn]] void bad_rational(std::string_view text) {
  throw Error(ErrorKind::Parse, "malformed rational '" + std::string(text) + "'");
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  std::string_view s = text;
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  Rational out;
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    std::string_view num = s.substr(0, slash), den = s.substr(slash + 1);
    if (!all_digits(num) || !all_digits(den)) bad_rational(text);
    mpz_class d(std::string(den), 10);
    if (d == 0) bad_rational(text);
    out = Rational(mpz_class(std::string(num), 10), d);
  } else if (auto dot = s.find('.'); dot != std::string_view::npos) {
    std::string_view whole = s.substr(0, dot), frac = s.substr(dot + 1);
    if (whole.empty() && frac.empty()) bad_rational(text);
    if ((!whole.empty() && !all_digits(whole)) || (!frac.empty() && !all_digits(frac))) {
      bad_rational(text);
    }
    mpz_class num(std::string(whole.empty() ? "0" : whole) + std::string(frac), 10);
    mpz_class den;
    mpz_ui_pow_ui(den.get_mpz_t(), 10, frac.size());
    out = Rational(num, den);
  } else {
    if (!all_digits(s)) bad_rational(text);
    out = Rational(mpz_class(std::string(s), 10));
  }
  out.canonicalize();
  return negative ? Rational(-out) : out;
}

Rational ratio(long num, long den) {
  if (den == 0) throw Error(ErrorKind::Domain, "zero denominator");
  Rational q(num, den);
  q.canonicalize();
  return q;
}

std::string to_string(const Rational& q) { return q.get_str(); }

double to_double(const Rational& q) { return q.get_d(); }

Rational pow(const Rational& base, long exponent) {
  if (exponent < 0) {
    if (sgn(base) == 0) throw Error(ErrorKind::Domain, "0 raised to a negative power");
    return pow(Rational(1) / base, -exponent);
  }
  mpz_class num, den;
  mpz_pow_ui(num.get_mpz_t(), base.get_num_mpz_t(), static_cast<unsigned long>(exponent));
  mpz_pow_ui(den.get_mpz_t(), base.get_den_mpz_t(), static_cast<unsigned long>(exponent));
  Rational out(num, den);
  out.canonicalize();
  return out;
}

Rational floor(const Rational& q) {
  mpz_class r;
  mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return Rational(r);
}

Rational ceil(const Rational& q) {
  mpz_class r;
  mpz_cdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return Rational(r);
}

Rational abs(const Rational& q) { return sgn(q) < 0 ? Rational(-q) : q; }

Extended::Extended(const Rational& value) : value_(value) {
  if (sgn(value_) < 0) throw Error(ErrorKind::Domain, "negative extended value " + value_.get_str());
}

Extended Extended::infinity() {
  Extended e;
  e.infinite_ = true;
  return e;
}

const Rational& Extended::value() const {
  if (infinite_) throw Error(ErrorKind::Domain, "value() of an infinite extended rational");
  return value_;
}

double Extended::to_double() const {
  return infinite_ ? HUGE_VAL : value_.get_d();
}

std::string Extended::str() const { return infinite_ ? "inf" : value_.get_str(); }

Extended operator+(const Extended& a, const Extended& b) {
  if (a.infinite_ || b.infinite_) return Extended::infinity();
  return Extended(Rational(a.value_ + b.value_));
}

Extended operator*(const Extended& a, const Extended& b) {
  if (a.is_zero() || b.is_zero()) return Extended(0);
  if (a.infinite_ || b.infinite_) return Extended::infinity();
  return Extended(Rational(a.value_ * b.value_));
}

bool operator==(const Extended& a, const Extended& b) {
  if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
  return a.value_ == b.value_;
}

std::strong_ordering operator<=>(const Extended& a, const Extended& b) {
  if (a.infinite_ || b.infinite_) {
    return static_cast<int>(a.infinite_) <=> static_cast<int>(b.infinite_);
  }
  int c = cmp(a.value_, b.value_);
  return c <=> 0;
}

Extended parse_extended(std::string_view text) {
  std::string s(text);
  if (s == "inf" || s == "+inf" || s == "infinity" || s == "INF") return Extended::infinity();
  return Extended(parse_rational(text));
}

}  // namespace linf
