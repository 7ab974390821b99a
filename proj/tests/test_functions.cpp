#include <doctest.h>

#include <random>

#include "linf/catalog.hpp"
#include "linf/error.hpp"
#include "linf/function.hpp"
#include "random_functions.hpp"

using namespace linf;
using namespace linf::testing;

namespace {

Rational q(const char* s) { return parse_rational(s); }

Point point(std::map<Index, Rational> coords, Rational tail = 0) { return Point{std::move(coords), std::move(tail)}; }

bool in(const Rational& x, const char* lo, const char* hi) { return q(lo) <= x && x <= q(hi); }

// Direct reading of the counterexample's defining formula.
Rational counterexample_oracle(const Point& x) {
  auto s = [](const Rational& v) { return in(v, "0", "1/3") || in(v, "2/3", "1"); };
  auto l = [](const Rational& v) { return in(v, "0", "1/3"); };
  auto h = [](const Rational& v) { return in(v, "2/3", "1"); };
  // With the tail outside L no term survives; with it inside L (so outside H)
  // only terms with n below the last explicit coordinate can.
  if (!l(x.tail)) return 0;
  Index end = x.explicit_end();
  auto above_ok = [&](Index n) {
    for (Index i = n + 1; i < end; ++i) {
      if (!l(x.at(i))) return false;
    }
    return true;
  };
  Rational total = 0;
  if (s(x.at(0)) && above_ok(0)) total += q("3/2");
  for (Index n = 1; n < end; ++n) {
    bool ok = h(x.at(n)) && above_ok(n);
    for (Index i = 0; i < n && ok; ++i) ok = s(x.at(i));
    if (ok) total += 2 * pow(q("3/2"), static_cast<long>(n));
  }
  return total;
}

Cell random_cell(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> k(-1, 1), count(0, 3), index(0, 4);
  Cell c;
  for (int j = count(rng); j > 0; --j) c.base.set(static_cast<Index>(index(rng)), k(rng));
  if (std::bernoulli_distribution(0.3)(rng)) c.tail_offset = q("1/2");
  return c;
}

// f evaluated at (corner_0 + x_0, ..., corner_n + x_n, a_{n+1}, ...).
Point spliced(const Anchor& a, const std::vector<Rational>& x) {
  Point p;
  p.tail = a.values.tail;
  for (const auto& [i, v] : a.values.coords) {
    if (i >= x.size()) p.coords[i] = v;
  }
  Point corner = a.cell.corner_point();
  for (Index i = 0; i < x.size(); ++i) p.coords[i] = corner.at(i) + x[i];
  return p;
}

std::vector<Rational> unit_sample(std::mt19937_64& rng, std::size_t dims) {
  std::vector<Rational> x(dims);
  for (auto& v : x) v = grid_value(rng, 0, 1);
  return x;
}

// Function of coordinates 0..2 only.
Function random_cylinder(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> kind(0, depth <= 0 ? 2 : 4), index(0, 2);
  auto idx = [&] { return static_cast<Index>(index(rng)); };
  switch (kind(rng)) {
    case 0: return coord(idx());
    case 1: return piecewise(idx(), random_piecewise(rng, 2));
    case 2: return indicator(BoxUnion(Box({{idx(), random_interval(rng, -1, 2)}}, IntervalSet::whole())));
    case 3: return random_cylinder(rng, depth - 1) + random_cylinder(rng, depth - 1);
    default: return random_cylinder(rng, depth - 1) * random_cylinder(rng, depth - 1);
  }
}

}  // namespace

TEST_CASE("evaluation examples") {
  CHECK(eval_exact(constant(1), point({{0, q("7")}}, q("1/2"))) == 1);
  CHECK(eval(constant(1), Point{}) == 1.0);

  Function f = catalog::counterexample();
  CHECK(eval_exact(f, Point{}) == q("3/2"));
  CHECK(eval_exact(f, point({{1, q("1/2")}})) == 0);
  CHECK(eval_exact(f, point({{1, q("2/5")}})) == 0);
  // x_0 in S, x_1 in H, rest in L: the n = 1 term, 2 * 3/2.
  CHECK(eval_exact(f, point({{0, q("1")}, {1, q("3/4")}})) == 3);
  CHECK(eval_exact(f, point({{0, q("1/5")}, {1, q("2/3")}, {2, q("1")}})) == q("9/2"));
  CHECK(eval_exact(f, point({}, q("1/2"))) == 0);

  Function xy = coord(0) * coord(5);
  CHECK(eval_exact(xy, point({{0, 3}, {5, q("1/2")}})) == q("3/2"));
  CHECK(eval_exact(clamp(xy, Extended(1)), point({{0, 3}, {5, q("1/2")}})) == 0);
  CHECK(eval_exact(clamp(xy, Extended(2)), point({{0, 3}, {5, q("1/2")}})) == q("3/2"));
}

TEST_CASE("counterexample matches its defining formula") {
  std::mt19937_64 rng(11);
  std::vector<Rational> values = {0, q("1/6"), q("1/3"), q("1/2"), q("2/3"), q("5/6"), 1, q("-1/6")};
  std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
  std::uniform_int_distribution<int> len(0, 8);
  Function f = catalog::counterexample();
  for (int trial = 0; trial < 2000; ++trial) {
    Point x;
    for (int i = len(rng); i > 0; --i) x.coords[static_cast<Index>(i - 1)] = values[pick(rng)];
    x.tail = values[pick(rng) % 3];  // inside or on the edge of L, or 1/2
    CHECK(eval_exact(f, x) == counterexample_oracle(x));
  }
}

TEST_CASE("series errors") {
  Series s;
  s.coefficient = {{1, 2}};
  s.below = Piecewise::constant(1);
  s.at = Piecewise::constant(1);
  s.above = IntervalSet::whole();
  try {
    eval_exact(series(s), Point{});
    FAIL("expected SeriesNotSummable");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SeriesNotSummable);
  }
  s.tail_bound = TailBound{Extended::infinity(), 0};
  try {
    eval_exact(series(s), Point{});
    FAIL("expected SeriesNotSummable");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SeriesNotSummable);
  }
  // Partial sums are still available.
  CHECK(eval_partial(series(s), Point{}, 3) == 15);

  s.tail_bound = TailBound{Extended(1), 2};
  CHECK_THROWS_AS(series(s), Error);
}

TEST_CASE("geometric series closed form") {
  // sum_{n>=0} (1/2)^n x_0...x_{n-1} at x = (1/2, 1/2, ...): sum (1/4)^n = 4/3.
  Series s;
  s.coefficient = {{1, q("1/2")}};
  s.below = Piecewise({{Interval::whole(), Polynomial::identity()}});
  s.at = Piecewise::constant(1);
  s.above = IntervalSet::whole();
  s.tail_bound = TailBound{Extended(2), q("1/2")};
  Function g = series(s);
  CHECK(eval_exact(g, point({}, q("1/2"))) == q("4/3"));
  // x_0 = 1, rest 1/2: 1 + (1/2)(1 + sum_{m>=1} (1/2)^m (1/2)^m) ... computed termwise.
  Rational expect = 1;
  for (int n = 1; n < 200; ++n) expect += pow(q("1/2"), n) * pow(q("1/2"), n - 1);
  CHECK(std::abs(Rational(eval_exact(g, point({{0, 1}}, q("1/2"))) - expect).get_d()) < 1e-40);
}

TEST_CASE("slice examples") {
  Function xy = coord(0) * coord(5);
  Anchor a{point({{5, q("1/2")}}), Cell{}};
  SlicedFunction g = slice(xy, a, 2);
  CHECK(g.dims == 3);
  CHECK(g.active() == std::vector<Index>{0});
  std::vector<Rational> x = {q("1/3"), q("1/4"), q("1/5")};
  CHECK(g.exact(x) == q("1/6"));
  CHECK(g(std::vector<double>{0.5, 0.1, 0.9}) == doctest::Approx(0.25));

  SlicedFunction h = slice(xy, a, 5);
  CHECK(h.active() == std::vector<Index>{0, 5});
  std::vector<Rational> y = {q("1/3"), 0, 0, 0, 0, q("3/4")};
  CHECK(h.exact(y) == q("1/4"));

  // Counterexample at the zero anchor: N + 1 terms, no contribution beyond N.
  Function f = catalog::counterexample();
  for (std::size_t n = 1; n <= 8; ++n) {
    SlicedFunction fn = slice(f, Anchor{}, n);
    const auto* terms = std::get_if<Sum>(&fn.body.node().v);
    REQUIRE(terms != nullptr);
    CHECK(terms->terms.size() == n + 1);
  }
}

TEST_CASE("property: slices agree with evaluation at the spliced point") {
  std::mt19937_64 rng(21);
  std::vector<Function> fs = {catalog::counterexample(), catalog::divergent_series()};
  for (int k = 0; k < 150; ++k) fs.push_back(random_function(rng, 3));
  std::uniform_int_distribution<std::size_t> dims(0, 6);
  for (const auto& f : fs) {
    for (int rep = 0; rep < 4; ++rep) {
      Anchor a{random_point(rng, 7, 0, 1), random_cell(rng)};
      std::size_t n = dims(rng);
      SlicedFunction g;
      try {
        g = slice(f, a, n);
      } catch (const Error& e) {
        // A series may fail to converge at the anchor; evaluation must agree.
        CHECK(e.kind() == ErrorKind::SeriesNotSummable);
        continue;
      }
      for (int s = 0; s < 6; ++s) {
        auto x = unit_sample(rng, n + 1);
        Point p = spliced(a, x);
        Rational expect;
        try {
          expect = eval_exact(f, p);
        } catch (const Error& e) {
          CHECK(e.kind() == ErrorKind::SeriesNotSummable);
          continue;
        }
        INFO(f.str(), " n=", n);
        CHECK(g.exact(x) == expect);
        for (Index i : g.active()) CHECK(i <= n);
      }
    }
  }
}

TEST_CASE("property: cylinder slices do not depend on the anchor") {
  std::mt19937_64 rng(22);
  for (int k = 0; k < 200; ++k) {
    Function f = random_cylinder(rng, 3);
    std::uniform_int_distribution<std::size_t> dims(2, 6);
    std::size_t n = dims(rng);
    Cell cell = random_cell(rng);
    SlicedFunction g1 = slice(f, Anchor{random_point(rng, 8), cell}, n);
    SlicedFunction g2 = slice(f, Anchor{random_point(rng, 8), cell}, n);
    for (int s = 0; s < 10; ++s) {
      auto x = unit_sample(rng, n + 1);
      CHECK(g1.exact(x) == g2.exact(x));
    }
  }
}

TEST_CASE("support examples") {
  Support unit = support(indicator(BoxUnion(Box::unit_cell())));
  REQUIRE(unit.known);
  REQUIRE(unit.sets.boxes.size() == 1);
  CHECK(unit.sets.boxes[0] == Box::unit_cell());

  IntervalSet s = unite(IntervalSet(Interval::closed(0, q("1/3"))), IntervalSet(Interval::closed(q("2/3"), 1)));
  Support sf = support(catalog::counterexample());
  REQUIRE(sf.known);
  bool has_product_set = false;
  for (const auto& b : sf.sets.boxes) {
    CHECK(is_subset(b, Box({}, s)));
    has_product_set = has_product_set || b == Box({}, s);
  }
  CHECK(has_product_set);
  CHECK(union_measure(sf.sets) == Extended(0));

  CHECK_FALSE(support(coord(0)).known);
  CHECK(support(coord(0) * indicator(BoxUnion(Box::unit_cell()))).known);
  CHECK_FALSE(support(coord(0) + indicator(BoxUnion(Box::unit_cell()))).known);
  CHECK(support(scale(0, coord(0))).known);
  CHECK(support(constant(0)).sets.boxes.empty());
}

TEST_CASE("property: structured functions vanish off their support") {
  std::mt19937_64 rng(23);
  int outside = 0;
  for (int k = 0; k < 300; ++k) {
    Function f = random_function(rng, 3, true);
    Support s = support(f);
    REQUIRE(s.known);
    for (int rep = 0; rep < 30; ++rep) {
      Point x = random_point(rng, 7);
      bool covered = false;
      for (const auto& b : s.sets.boxes) covered = covered || b.contains(x);
      if (covered) continue;
      ++outside;
      Rational v;
      try {
        v = eval_exact(f, x);
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SeriesNotSummable);
        continue;
      }
      INFO(f.str());
      CHECK(v == 0);
    }
  }
  CHECK(outside > 1000);
}

TEST_CASE("property: series partial sums stay within the tail bound") {
  std::mt19937_64 rng(24);
  std::uniform_int_distribution<Index> cut(0, 12);
  for (int k = 0; k < 300; ++k) {
    Function f = random_series(rng);
    const auto& s = std::get<Series>(f.node().v);
    for (int rep = 0; rep < 10; ++rep) {
      Point x = random_point(rng, 6);
      Index k1 = cut(rng), k2 = cut(rng);
      Rational a = eval_partial(f, x, k1), b = eval_partial(f, x, k2);
      CHECK(Extended(abs(a - b)) <= s.tail_bound->at(std::min(k1, k2)));
      CHECK(Extended(abs(eval_exact(f, x) - a)) <= s.tail_bound->at(k1));
    }
  }
}

TEST_CASE("property: translation shifts the argument") {
  std::mt19937_64 rng(25);
  for (int k = 0; k < 300; ++k) {
    Function f = random_function(rng, 3);
    SparseVector t = random_shift(rng, 3);
    for (int rep = 0; rep < 10; ++rep) {
      Point x = random_point(rng, 7);
      Point moved = x;
      for (const auto& [i, v] : t.entries()) moved.coords[i] = x.at(i) + v;
      try {
        Rational expect = eval_exact(f, moved);
        CHECK(eval_exact(translate(f, t), x) == expect);
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SeriesNotSummable);
      }
    }
  }
}

TEST_CASE("property: substitution fixes coordinates and renumbers the rest") {
  std::mt19937_64 rng(26);
  std::uniform_int_distribution<int> count(1, 3), index(0, 5);
  std::vector<Function> fs = {catalog::counterexample(), catalog::divergent_series()};
  for (int k = 0; k < 200; ++k) fs.push_back(random_function(rng, 3));
  for (const auto& f : fs) {
    std::map<Index, Rational> fixed;
    for (int j = count(rng); j > 0; --j) fixed[static_cast<Index>(index(rng))] = grid_value(rng, -1, 2);
    Function g = substitute(f, fixed);
    for (int rep = 0; rep < 8; ++rep) {
      Point y = random_point(rng, 6);
      // Free coordinate k of y sits at the k-th index not in `fixed`.
      Point x;
      x.tail = y.tail;
      Index free = 0;
      for (Index i = 0; i < 12; ++i) {
        if (fixed.count(i)) {
          x.coords[i] = fixed[i];
        } else {
          x.coords[i] = y.at(free++);
        }
      }
      for (const auto& [k2, v] : y.coords) {
        if (k2 >= free) x.coords[k2 + fixed.size()] = v;
      }
      try {
        Rational expect = eval_exact(f, x);
        INFO(f.str());
        CHECK(eval_exact(g, y) == expect);
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SeriesNotSummable);
      }
    }
  }
}

TEST_CASE("sigma cover examples") {
  CoverResult unit = sigma_cover(BoxUnion(Box::unit_cell()));
  CHECK(unit.status == CoverStatus::Finite);
  REQUIRE(unit.cells.size() == 1);
  CHECK(unit.cells[0] == cell_at({}));

  CoverResult two = sigma_cover(BoxUnion(Box({{0, Interval::closed(0, 2)}}, IntervalSet::unit())));
  CHECK(two.status == CoverStatus::Finite);
  CHECK(two.cells.size() == 2);

  CoverResult wide = sigma_cover(BoxUnion(Box({}, Interval::closed(0, 2))));
  CHECK(wide.status == CoverStatus::NotSigmaFinite);
  CHECK(wide.cells.empty());

  CoverResult unbounded = sigma_cover(BoxUnion(Box({{0, Interval::make(Rational(0), true, std::nullopt, false)}},
                                                   IntervalSet::unit())));
  CHECK(unbounded.status == CoverStatus::Infinite);

  // Null pieces never force a verdict.
  CoverResult null_wide = sigma_cover(BoxUnion(Box({{0, Interval::point(0)}}, Interval::closed(0, q("3/2")))));
  CHECK(null_wide.status == CoverStatus::Finite);
  CHECK(null_wide.cells.empty());
  CoverResult null_point = sigma_cover(
      BoxUnion(Box({{0, Interval::point(0)}, {1, Interval::make(std::nullopt, false, Rational(0), true)}},
                   IntervalSet::unit())));
  CHECK(null_point.status == CoverStatus::Finite);

  CoverResult c = sigma_cover(support(catalog::counterexample()).sets);
  CHECK(c.status == CoverStatus::Finite);
  REQUIRE(c.cells.size() == 1);
  CHECK(c.cells[0] == cell_at({}));
}

TEST_CASE("sup bound examples") {
  Box unit = Box::unit_cell();
  CHECK(sup_bound(coord(0) * coord(1) * indicator(BoxUnion(unit)), unit) == Rational(1));
  Box wide({{0, Interval::closed(-3, 2)}}, IntervalSet::unit());
  CHECK(sup_bound(coord(0), wide) == Rational(3));
  CHECK(sup_bound(translate(coord(0), SparseVector{{0, 4}}), wide) == Rational(6));
  CHECK(sup_bound(clamp(coord(0), Extended(q("1/2"))), wide) == q("1/2"));
  CHECK_FALSE(sup_bound(coord(0), Box::whole()).has_value());
  CHECK_FALSE(sup_bound(catalog::counterexample(), unit).has_value());
  // A zero factor bounds the product even next to an unbounded one.
  CHECK(sup_bound(coord(0) * constant(0), Box::whole()) == Rational(0));
}

TEST_CASE("property: sup bound dominates |f| inside the region") {
  std::mt19937_64 rng(71);
  std::uniform_int_distribution<int> step(0, 6);
  int bounded = 0;
  for (int k = 0; k < 300; ++k) {
    Function f = random_function(rng, 3);
    std::map<Index, IntervalSet> comps;
    for (Index i = 0; i < 8; ++i) {
      Rational a = random_rational(rng, -2, 2);
      comps[i] = Interval::closed(a, a + random_rational(rng, 0, 1));
    }
    Box region(comps, IntervalSet::unit());
    auto b = sup_bound(f, region);
    if (!b) continue;
    ++bounded;
    for (int s = 0; s < 20; ++s) {
      Point x;
      for (const auto& [i, c] : comps) {
        Interval h = c.hull();
        x.coords[i] = h.lo() + (h.hi() - h.lo()) * ratio(step(rng), 6);
      }
      x.tail = ratio(step(rng), 6);
      INFO(f.str(), " at ", x.coords.begin()->second.get_str());
      CHECK(std::abs(eval(f, x)) <= b->get_d() * (1 + 1e-12) + 1e-12);
    }
  }
  CHECK(bounded > 100);
}
