#pragma once

#include <string>
#include <utility>
#include <vector>

#include "linf/interval.hpp"

namespace linf {

/// Polynomial with exact rational coefficients (coeffs[k] multiplies x^k).
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<Rational> coeffs);
  static Polynomial constant(const Rational& c) { return Polynomial({c}); }
  static Polynomial identity() { return Polynomial({Rational(0), Rational(1)}); }

  const std::vector<Rational>& coeffs() const { return c_; }
  bool is_zero() const { return c_.empty(); }
  /// -1 for the zero polynomial.
  int degree() const { return static_cast<int>(c_.size()) - 1; }

  Rational operator()(const Rational& x) const;
  double operator()(double x) const;

  /// x -> p(x + d)
  Polynomial shifted(const Rational& d) const;
  Polynomial scaled(const Rational& s) const;
  /// Exact integral over [a, b].
  Rational integral(const Rational& a, const Rational& b) const;
  /// Rigorous enclosure of the values on [a, b] (interval Horner scheme).
  std::pair<Rational, Rational> enclosure(const Rational& a, const Rational& b) const;
  std::string str() const;

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.c_ == b.c_; }

 private:
  std::vector<Rational> c_;
  std::vector<double> approx_;
};

struct Piece {
  Interval domain;
  Polynomial poly;
  friend bool operator==(const Piece&, const Piece&) = default;
};

/// Univariate piecewise polynomial, zero outside its pieces. Pieces are
/// disjoint, ordered, and touching pieces with equal polynomials are merged.
class Piecewise {
 public:
  Piecewise() = default;
  explicit Piecewise(std::vector<Piece> pieces);

  static Piecewise constant(const Rational& c);
  static Piecewise identity();
  static Piecewise indicator(const IntervalSet& set);

  const std::vector<Piece>& pieces() const { return pieces_; }
  bool is_zero() const { return pieces_.empty(); }

  Rational operator()(const Rational& x) const;
  double operator()(double x) const;

  /// x -> f(x + d)
  Piecewise shifted(const Rational& d) const;
  Piecewise scaled(const Rational& s) const;
  Piecewise restricted(const IntervalSet& set) const;
  friend Piecewise operator*(const Piecewise& a, const Piecewise& b);

  bool is_piecewise_constant() const;
  /// True when the function is an indicator (every piece is the constant 1).
  bool is_indicator() const;
  /// Equal to 1 at every point of the closed unit interval.
  bool is_one_on_unit() const;
  /// Union of the piece domains with a nonzero polynomial.
  IntervalSet nonzero_set() const;
  /// Piece endpoints falling strictly inside (a, b).
  std::vector<Rational> breakpoints(const Rational& a, const Rational& b) const;

  /// Exact integral over a bounded interval.
  Rational integral(const Interval& over) const;
  /// Integral over the whole line; nullopt when a nonzero piece is unbounded.
  std::optional<Rational> lebesgue_integral() const;
  /// Enclosure of the values on [a, b], including 0 where no piece applies.
  std::pair<Rational, Rational> enclosure(const Rational& a, const Rational& b) const;
  std::string str() const;

  friend bool operator==(const Piecewise&, const Piecewise&) = default;

 private:
  std::vector<Piece> pieces_;
};

}  // namespace linf
