#include <doctest.h>

#include <algorithm>
#include <array>
#include <random>

#include "linf/box.hpp"
#include "linf/error.hpp"
#include "test_support.hpp"

using namespace linf;

namespace {

Rational q(const char* s) { return parse_rational(s); }

}  // namespace

TEST_CASE("rational parsing") {
  CHECK(parse_rational("3/6") == Rational(1, 2));
  CHECK(parse_rational("-7") == Rational(-7));
  CHECK(parse_rational("0.125") == Rational(1, 8));
  CHECK(parse_rational(" -2/4 ") == Rational(-1, 2));
  CHECK_THROWS_AS(parse_rational("1/0"), Error);
  CHECK_THROWS_AS(parse_rational("1//2"), Error);
  CHECK_THROWS_AS(parse_rational("abc"), Error);
  CHECK_THROWS_AS(parse_rational(""), Error);
  CHECK(parse_extended("inf").is_infinite());
  CHECK_THROWS_AS(parse_extended("-1"), Error);
}

TEST_CASE("extended arithmetic uses 0 * inf = 0") {
  Extended inf = Extended::infinity();
  CHECK((Extended(0) * inf).is_zero());
  CHECK((inf * Extended(0)).is_zero());
  CHECK((Extended(2) * inf).is_infinite());
  CHECK((Extended(Rational(1, 3)) + Extended(Rational(2, 3))) == Extended(1));
  CHECK(Extended(5) < inf);
}

TEST_CASE("interval intersection and length") {
  CHECK(intersect(Interval::closed(0, 1), Interval::closed(q("1/2"), 2)) == Interval::closed(q("1/2"), 1));
  CHECK(intersect(Interval::closed_open(0, 1), Interval::closed(1, 2)).is_empty());
  CHECK(Interval::closed(q("1/4"), q("3/4")).length() == Extended(q("1/2")));
  CHECK(intersect(Interval::closed(0, 1), Interval::closed(1, 2)) == Interval::point(1));
  CHECK(Interval::open(1, 1) == Interval::empty());
  CHECK(Interval::whole().length().is_infinite());
  CHECK(Interval::closed(0, 1).translated(q("1/2")) == Interval::closed(q("1/2"), q("3/2")));
}

TEST_CASE("interval sets merge, complement and parse") {
  IntervalSet s = parse_interval_set("[0,1/3] u [2/3,1]");
  CHECK(s.intervals().size() == 2);
  CHECK(s.length() == Extended(q("2/3")));
  CHECK(unite(IntervalSet(Interval::closed_open(0, q("1/2"))), IntervalSet(Interval::closed(q("1/2"), 1))) ==
        IntervalSet::unit());
  CHECK(subtract(IntervalSet(Interval::closed(0, q("3/4"))), IntervalSet(Interval::closed(q("1/2"), 1))) ==
        IntervalSet(Interval::closed_open(0, q("1/2"))));
  CHECK(unite(s, s.complement()) == IntervalSet::whole());
  CHECK(parse_interval_set("R") == IntervalSet::whole());
  CHECK(parse_interval_set("(-inf, 0)") == IntervalSet(Interval::make(std::nullopt, false, Rational(0), false)));
  CHECK(parse_interval_set("{1/2}") == IntervalSet(Interval::point(q("1/2"))));
  CHECK(parse_interval_set("empty").is_empty());
  CHECK(almost_equal(IntervalSet::unit(), IntervalSet(Interval::open(0, 1))));
  CHECK_FALSE(almost_equal(IntervalSet::unit(), IntervalSet(Interval::closed(0, 2))));
  CHECK_THROWS_AS(parse_interval_set("[0,1"), Error);
  CHECK_THROWS_AS(parse_interval_set("[0,x]"), Error);
  CHECK_THROWS_AS(parse_interval_set("[0,1] v [2,3]"), Error);
}

TEST_CASE("box intersection") {
  Box c = Box::unit_cell();
  CHECK(intersect(c, c) == c);
  Box shifted({}, Interval::closed(q("1/2"), q("3/2")));
  CHECK(intersect(c, shifted) == Box({}, Interval::closed(q("1/2"), 1)));
  Box a({{0, Interval::closed(0, q("1/4"))}}, IntervalSet::unit());
  Box b({{0, Interval::closed(q("1/2"), 1)}}, IntervalSet::unit());
  CHECK(intersect(a, b).is_empty());
  CHECK(intersect(a, b) == Box());
}

TEST_CASE("box canonical form drops components equal to the tail") {
  Box b({{3, IntervalSet::unit()}, {5, Interval::closed(0, 2)}}, IntervalSet::unit());
  CHECK(b.explicit_components().size() == 1);
  CHECK(b.component(3) == IntervalSet::unit());
  CHECK(Box({{0, IntervalSet()}}, IntervalSet::unit()) == Box());
}

TEST_CASE("box measure") {
  CHECK(measure(Box::unit_cell()) == Extended(1));
  CHECK(measure(Box({}, Interval::closed(0, q("1/2")))) == Extended(0));
  CHECK(measure(Box({}, Interval::closed(0, 2))).is_infinite());
  CHECK(measure(Box()) == Extended(0));
  for (Index n = 0; n <= 30; ++n) {
    std::map<Index, IntervalSet> comps;
    for (Index i = 0; i < n; ++i) comps[i] = Interval::closed(0, q("1/2"));
    Box b(comps, IntervalSet::unit());
    CHECK(measure(b) == Extended(pow(Rational(1, 2), static_cast<long>(n))));
  }
  // 0 * inf: a degenerate side against a wide tail.
  CHECK(measure(Box({{0, Interval::point(1)}}, Interval::closed(0, 2))) == Extended(0));
  CHECK(measure(Box({{0, Interval::closed(0, 3)}}, IntervalSet::unit())) == Extended(3));
}

TEST_CASE("box measure tail factor against k disjoint unit cells") {
  // A tail [0,2] box contains the disjoint cells C + j e_0 ... for any k, each
  // of measure 1, so its measure exceeds every k.
  Box wide({}, Interval::closed(0, 2));
  for (long k = 1; k <= 16; ++k) {
    Extended total = 0;
    std::vector<Box> cells;
    for (long j = 0; j < k; ++j) {
      std::map<Index, IntervalSet> comps;
      for (long bit = 0; bit < 5; ++bit) {
        comps[static_cast<Index>(bit)] = ((j >> bit) & 1) ? Interval::closed_open(1, 2) : Interval::closed_open(0, 1);
      }
      Box cell(comps, Interval::closed(0, 1));
      CHECK(is_subset(cell, wide));
      total = total + measure(cell);
      cells.push_back(cell);
    }
    CHECK(total == Extended(k));
    CHECK(union_measure(BoxUnion(cells)) == Extended(k));
    CHECK(total <= measure(wide));
  }
}

TEST_CASE("box translation") {
  Box moved = translate(Box::unit_cell(), SparseVector{{0, q("1/2")}});
  CHECK(moved == Box({{0, Interval::closed(q("1/2"), q("3/2"))}}, IntervalSet::unit()));
  CHECK(translate(Box(), SparseVector{{2, Rational(5)}}).is_empty());
}

TEST_CASE("union disjointify and measure") {
  Box a({{0, Interval::closed(0, q("3/4"))}}, IntervalSet::unit());
  Box b({{0, Interval::closed(q("1/2"), 1)}}, IntervalSet::unit());
  // Inclusion-exclusion in the single explicit coordinate.
  Rational expected = q("3/4") + q("1/2") - q("1/4");
  BoxUnion d = disjointify(BoxUnion({a, b}));
  CHECK(union_measure(BoxUnion({a, b})) == Extended(expected));
  for (std::size_t i = 0; i < d.boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < d.boxes.size(); ++j) {
      CHECK(measure(intersect(d.boxes[i], d.boxes[j])) == Extended(0));
    }
  }
  CHECK(disjointify(BoxUnion({Box::unit_cell(), Box::unit_cell()})).boxes.size() == 1);
  CHECK(union_measure(BoxUnion()) == Extended(0));
  CHECK(union_measure(BoxUnion({a, Box({}, Interval::closed(0, 2))})).is_infinite());
  Box c({{0, Interval::closed(2, 3)}}, IntervalSet::unit());
  BoxUnion disjoint = disjointify(BoxUnion({a, c}));
  CHECK(disjoint.boxes.size() == 2);
  CHECK(std::count(disjoint.boxes.begin(), disjoint.boxes.end(), a) == 1);
  CHECK(std::count(disjoint.boxes.begin(), disjoint.boxes.end(), c) == 1);
}

TEST_CASE("property: translation invariance of box measure") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    Box p = testing::random_box(rng, 5);
    SparseVector t = testing::random_shift(rng, 6);
    CHECK(measure(translate(p, t)) == measure(p));
  }
}

TEST_CASE("property: monotonicity under coordinatewise inclusion") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    Box outer = testing::random_box(rng, 4);
    Box p = intersect(outer, testing::random_box(rng, 4));
    REQUIRE(is_subset(p, outer));
    CHECK(measure(p) <= measure(outer));
  }
}

TEST_CASE("property: boundary flags never change the measure") {
  std::mt19937_64 rng(13);
  auto toggle = [&](const IntervalSet& s) {
    std::vector<Interval> out;
    for (const auto& i : s.intervals()) {
      std::optional<Rational> lo, hi;
      if (!i.lo_infinite()) lo = i.lo();
      if (!i.hi_infinite()) hi = i.hi();
      out.push_back(Interval::make(lo, !i.lo_closed(), hi, !i.hi_closed()));
    }
    return IntervalSet(out);
  };
  for (int trial = 0; trial < 300; ++trial) {
    Box p = testing::random_box(rng, 4);
    std::map<Index, IntervalSet> comps;
    for (const auto& [i, s] : p.explicit_components()) comps[i] = toggle(s);
    CHECK(measure(Box(comps, toggle(p.tail()))) == measure(p));
  }
}

TEST_CASE("property: refinement order does not change the union measure") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Box> boxes;
    for (int k = 0; k < 4; ++k) boxes.push_back(testing::random_box(rng, 3, true));
    Extended forward = union_measure(BoxUnion(boxes));
    std::reverse(boxes.begin(), boxes.end());
    CHECK(union_measure(BoxUnion(boxes)) == forward);
    std::shuffle(boxes.begin(), boxes.end(), rng);
    CHECK(union_measure(BoxUnion(boxes)) == forward);
  }
}

TEST_CASE("property: disjoint union measure against a grid oracle") {
  // Boxes on two explicit coordinates with endpoints in (1/8)Z and tail [0,1]:
  // the union's measure is the count of covered grid squares over 64.
  std::mt19937_64 rng(19);
  std::uniform_int_distribution<int> pick(0, 8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Box> boxes;
    std::vector<std::array<int, 4>> raw;
    for (int k = 0; k < 3; ++k) {
      int a = pick(rng), b = pick(rng), c = pick(rng), d = pick(rng);
      if (a > b) std::swap(a, b);
      if (c > d) std::swap(c, d);
      raw.push_back({a, b, c, d});
      boxes.emplace_back(std::map<Index, IntervalSet>{{0, Interval::closed(ratio(a, 8), ratio(b, 8))},
                                                      {1, Interval::closed(ratio(c, 8), ratio(d, 8))}},
                         IntervalSet::unit());
    }
    int covered = 0;
    for (int x = 0; x < 8; ++x) {
      for (int y = 0; y < 8; ++y) {
        for (const auto& r : raw) {
          if (r[0] <= x && x < r[1] && r[2] <= y && y < r[3]) {
            ++covered;
            break;
          }
        }
      }
    }
    CHECK(union_measure(BoxUnion(boxes)) == Extended(ratio(covered, 64)));
  }
}

TEST_CASE("subtract keeps a null overlap when tails differ") {
  Box p = Box::unit_cell();
  Box shifted({}, Interval::closed(q("1/2"), q("3/2")));
  auto pieces = subtract(p, shifted);
  REQUIRE(pieces.size() == 1);
  CHECK(pieces[0] == p);
}
