#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "linf/rational.hpp"

namespace linf {

/// An interval of the real line with exact rational endpoints. Either endpoint
/// may be infinite (and is then open). There is a single canonical empty value.
class Interval {
 public:
  /// Canonical empty interval.
  Interval() = default;

  /// nullopt endpoints are infinite.
  static Interval make(std::optional<Rational> lo, bool lo_closed,
                       std::optional<Rational> hi, bool hi_closed);
  static Interval closed(const Rational& lo, const Rational& hi) { return make(lo, true, hi, true); }
  static Interval open(const Rational& lo, const Rational& hi) { return make(lo, false, hi, false); }
  static Interval closed_open(const Rational& lo, const Rational& hi) { return make(lo, true, hi, false); }
  static Interval point(const Rational& x) { return closed(x, x); }
  static Interval whole() { return make(std::nullopt, false, std::nullopt, false); }
  static Interval empty() { return {}; }

  bool is_empty() const { return empty_; }
  bool lo_infinite() const { return lo_inf_; }
  bool hi_infinite() const { return hi_inf_; }
  bool lo_closed() const { return lo_closed_; }
  bool hi_closed() const { return hi_closed_; }
  /// Finite endpoints; meaningless for infinite sides.
  const Rational& lo() const { return lo_; }
  const Rational& hi() const { return hi_; }
  bool bounded() const { return !empty_ && !lo_inf_ && !hi_inf_; }

  Extended length() const;
  bool contains(const Rational& x) const;
  bool contains(double x) const;
  Interval translated(const Rational& t) const;
  std::string str() const;

  friend Interval intersect(const Interval& a, const Interval& b);
  friend bool operator==(const Interval& a, const Interval& b);

  /// Orders by lower endpoint (-inf first, closed before open at equal value).
  static bool lower_less(const Interval& a, const Interval& b);

 private:
  Rational lo_{0}, hi_{0};
  bool lo_closed_ = false, hi_closed_ = false;
  bool lo_inf_ = false, hi_inf_ = false;
  bool empty_ = true;
};

/// Finite union of pairwise disjoint, non-adjacent intervals kept in increasing
/// order. Every value has exactly one representation.
class IntervalSet {
 public:
  IntervalSet() = default;
  IntervalSet(const Interval& interval);  // NOLINT(google-explicit-constructor)
  explicit IntervalSet(std::vector<Interval> intervals);

  static IntervalSet whole() { return IntervalSet(Interval::whole()); }
  static IntervalSet unit() { return IntervalSet(Interval::closed(0, 1)); }

  const std::vector<Interval>& intervals() const { return parts_; }
  bool is_empty() const { return parts_.empty(); }
  bool bounded() const;
  Extended length() const;
  bool contains(const Rational& x) const;
  bool contains(double x) const;
  /// Smallest interval containing the set (empty for the empty set).
  Interval hull() const;
  IntervalSet translated(const Rational& t) const;
  IntervalSet complement() const;
  bool subset_of(const IntervalSet& other) const;
  /// Every endpoint of every part, increasing, without duplicates.
  std::vector<Rational> endpoints() const;
  std::string str() const;

  friend IntervalSet unite(const IntervalSet& a, const IntervalSet& b);
  friend IntervalSet intersect(const IntervalSet& a, const IntervalSet& b);
  friend IntervalSet subtract(const IntervalSet& a, const IntervalSet& b);
  friend bool operator==(const IntervalSet& a, const IntervalSet& b) = default;

 private:
  std::vector<Interval> parts_;
};

/// True when the symmetric difference has zero length.
bool almost_equal(const IntervalSet& a, const IntervalSet& b);

/// Text form: "[0,1/3] u [2/3,1]", "(0,inf)", "{1/2}", "empty", "R".
IntervalSet parse_interval_set(std::string_view text);

}  // namespace linf
