#pragma once

#include <random>

#include <doctest.h>

#include "linf/box.hpp"

namespace linf::testing {

/// Rational in [lo, hi] with denominator dividing 12.
inline Rational random_rational(std::mt19937_64& rng, int lo, int hi) {
  std::uniform_int_distribution<int> pick(lo * 12, hi * 12);
  return ratio(pick(rng), 12);
}

inline Interval random_interval(std::mt19937_64& rng, int lo, int hi) {
  Rational a = random_rational(rng, lo, hi), b = random_rational(rng, lo, hi);
  if (b < a) std::swap(a, b);
  std::bernoulli_distribution coin(0.5);
  return Interval::make(a, coin(rng), b, coin(rng));
}

/// Box with up to `coords` explicit coordinates inside [-2,3]. The tail is
/// [0,1] unless `unit_tail` is false, in which case it is drawn from a small
/// family with lengths below, at and above 1.
inline Box random_box(std::mt19937_64& rng, int coords, bool unit_tail = false) {
  std::uniform_int_distribution<int> count(0, coords);
  std::map<Index, IntervalSet> comps;
  int k = count(rng);
  std::uniform_int_distribution<int> index(0, 7);
  for (int j = 0; j < k; ++j) comps[static_cast<Index>(index(rng))] = random_interval(rng, -2, 3);
  IntervalSet tail = IntervalSet::unit();
  if (!unit_tail) {
    std::uniform_int_distribution<int> kind(0, 3);
    switch (kind(rng)) {
      case 0: tail = Interval::closed(0, Rational(1, 2)); break;
      case 1: tail = Interval::closed(Rational(1, 3), Rational(4, 3)); break;
      case 2: tail = Interval::closed(-1, 1); break;
      default: break;
    }
  }
  return Box(comps, tail);
}

inline SparseVector random_shift(std::mt19937_64& rng, int coords) {
  std::uniform_int_distribution<int> count(0, coords);
  std::uniform_int_distribution<int> index(0, 9);
  SparseVector t;
  int k = count(rng);
  for (int j = 0; j < k; ++j) t.set(static_cast<Index>(index(rng)), random_rational(rng, -3, 3));
  return t;
}

}  // namespace linf::testing

namespace doctest {
template <>
struct StringMaker<linf::Extended> {
  static String convert(const linf::Extended& v) { return v.str().c_str(); }
};
template <>
struct StringMaker<linf::Rational> {
  static String convert(const linf::Rational& v) { return v.get_str().c_str(); }
};
template <>
struct StringMaker<linf::Box> {
  static String convert(const linf::Box& v) { return v.str().c_str(); }
};
template <>
struct StringMaker<linf::IntervalSet> {
  static String convert(const linf::IntervalSet& v) { return v.str().c_str(); }
};
template <>
struct StringMaker<linf::Interval> {
  static String convert(const linf::Interval& v) { return v.str().c_str(); }
};
}  // namespace doctest
