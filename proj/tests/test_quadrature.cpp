#include <doctest.h>

#include <optional>
#include <random>

#include "counterexample_oracle.hpp"
#include "linf/catalog.hpp"
#include "linf/error.hpp"
#include "linf/quadrature.hpp"
#include "random_functions.hpp"

using namespace linf;
using namespace linf::testing;

namespace {

Rational q(const char* s) { return parse_rational(s); }

QuadratureSpec exact_spec(Extended m = Extended::infinity()) {
  QuadratureSpec s;
  s.mode = QuadMode::Exact;
  s.truncation = m;
  return s;
}

SlicedFunction zero_slice(const Function& f, std::size_t n) { return slice(f, Anchor{}, n); }

// Random piecewise-constant function of coordinates 0..d-1 with nonnegative values.
Function random_step(std::mt19937_64& rng, int d, bool nonnegative) {
  std::uniform_int_distribution<int> terms(1, 3), c(nonnegative ? 0 : -3, 3);
  std::vector<Function> out;
  for (int t = terms(rng); t > 0; --t) {
    std::vector<Function> factors{constant(ratio(c(rng), 2))};
    for (int i = 0; i < d; ++i) {
      factors.push_back(piecewise(static_cast<Index>(i), Piecewise::indicator(IntervalSet(random_interval(rng, 0, 1)))));
    }
    out.push_back(product(factors));
  }
  return sum(out);
}

}  // namespace

TEST_CASE("Gauss rules integrate polynomials") {
  for (int order = 1; order <= 20; ++order) {
    const GaussRule& r = gauss_rule(order);
    for (int k = 0; k < 2 * order; ++k) {
      double s = 0;
      for (int j = 0; j < order; ++j) s += r.weights[j] * std::pow(r.nodes[j], k);
      CHECK(s == doctest::Approx(1.0 / (k + 1)).epsilon(1e-13));
    }
  }
}

TEST_CASE("slice integral examples") {
  SliceIntegral one = integrate_slice(SlicedFunction{3, constant(1)}, exact_spec());
  REQUIRE(one.exact);
  CHECK(*one.exact == 1);
  CHECK(one.error == 0);

  Function f = catalog::counterexample();
  for (int n = 0; n <= 12; ++n) {
    SliceIntegral r = integrate_slice(zero_slice(f, n), exact_spec());
    CHECK(*r.exact == 1);
    CHECK(*r.exact == counterexample_enumeration(n, std::nullopt));
  }
  for (int n = 0; n <= 22; ++n) {
    SliceIntegral r = integrate_slice(zero_slice(f, n), exact_spec(Extended(100)));
    CHECK(*r.exact == pow(Rational(3), std::min(n, 9) + 1) / pow(Rational(3), n + 1));
    if (n <= 9) CHECK(*r.exact == counterexample_enumeration(n, Rational(100)));
  }
  SliceIntegral n22 = integrate_slice(zero_slice(f, 22), exact_spec(Extended(100)));
  CHECK(*n22.exact == pow(Rational(3), 10) / pow(Rational(3), 23));

  QuadratureSpec tg;
  tg.mode = QuadMode::TensorGauss;
  Function xyz = coord(0) * coord(1) * coord(2);
  SliceIntegral cube = integrate_slice(zero_slice(xyz, 2), tg);
  CHECK(std::abs(cube.value - 0.125) < 1e-12);
  CHECK(*integrate_slice(zero_slice(xyz, 2), exact_spec()).exact == q("1/8"));
}

TEST_CASE("enumeration oracle agrees on mid-size slices") {
  Function f = catalog::counterexample();
  for (int n = 10; n <= 11; ++n) {
    CHECK(*integrate_slice(zero_slice(f, n), exact_spec(Extended(100))).exact ==
          counterexample_enumeration(n, Rational(100)));
  }
}

TEST_CASE("exact mode refuses forms it cannot integrate") {
  Function smooth = coord(0) * coord(0);
  // Truncation at 1/2 cuts through the polynomial.
  CHECK_THROWS_AS(integrate_slice(zero_slice(smooth, 0), exact_spec(Extended(q("1/2")))), Error);
  // A bound of 1 is never exceeded on [0,1]: exact again.
  CHECK(*integrate_slice(zero_slice(smooth, 0), exact_spec(Extended(1))).exact == q("1/3"));
  try {
    integrate_slice(SlicedFunction{1, real_constant(0.5)}, exact_spec());
    FAIL("expected FormNotExact");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::FormNotExact);
  }
  QuadratureSpec tg;
  tg.mode = QuadMode::TensorGauss;
  tg.order = 10;
  tg.budget = 1000;
  CHECK_THROWS_AS(integrate_slice(zero_slice(index_product(0, 5, Piecewise::identity()), 5), tg), Error);
}

TEST_CASE("numeric truncation drops whole values") {
  // g = x_0 on [0,1], M = 1/2: integral 1/8, dropped mass 1/2.
  QuadratureSpec s;
  s.mode = QuadMode::Auto;
  s.truncation = Extended(q("1/2"));
  SliceIntegral r = integrate_slice(zero_slice(coord(0), 0), s);
  CHECK(r.mode == QuadMode::Adaptive);
  CHECK(std::abs(r.value - 0.125) < 1e-9);
  CHECK(std::abs(r.exceedance - 0.5) < 1e-9);
}

TEST_CASE("indicator volumes") {
  IntervalSet s = unite(IntervalSet(Interval::closed(0, q("1/3"))), IntervalSet(Interval::closed(q("2/3"), 1)));
  for (std::size_t n = 0; n <= 20; ++n) {
    CHECK(integrate_indicator(BoxUnion(Box({}, s)), n) == pow(q("2/3"), static_cast<long>(n + 1)));
    CHECK(integrate_indicator(BoxUnion(Box::unit_cell()), n) == 1);
    CHECK(integrate_indicator(BoxUnion(), n) == 0);
  }
  // Overlapping boxes are counted once.
  Box a({{0, Interval::closed(0, q("1/2"))}}, IntervalSet::unit());
  Box b({{0, Interval::closed(q("1/4"), 1)}, {1, Interval::closed(0, q("1/2"))}}, IntervalSet::unit());
  CHECK(integrate_indicator(BoxUnion(std::vector<Box>{a, b}), 1) == q("1/2") + q("3/4") * q("1/2") - q("1/4") * q("1/2"));
}

TEST_CASE("property: numeric rules agree with exact values within their error") {
  std::mt19937_64 rng(31);
  for (int k = 0; k < 60; ++k) {
    int d = 1 + k % 6;
    Function f = random_step(rng, d, false);
    SlicedFunction g = zero_slice(f, d - 1);
    QuadratureSpec s;
    s.truncation = k % 2 ? Extended(1) : Extended::infinity();
    s.mode = QuadMode::Exact;
    SliceIntegral exact = integrate_slice(g, s);
    s.mode = d <= 3 ? QuadMode::Adaptive : QuadMode::Qmc;
    SliceIntegral num = integrate_slice(g, s);
    INFO(f.str(), " mode ", to_string(s.mode));
    CHECK(std::abs(num.value - exact.value) <= num.error + 1e-12);
    CHECK(std::abs(num.exceedance - exact.exceedance) <= num.error + 1e-12);
  }
}

TEST_CASE("property: truncation is monotone for nonnegative slices") {
  std::mt19937_64 rng(32);
  std::vector<Extended> levels = {Extended(0), Extended(q("1/2")), Extended(1), Extended(2), Extended(3),
                                  Extended::infinity()};
  for (int k = 0; k < 100; ++k) {
    Function f = random_step(rng, 1 + k % 4, true);
    PreparedSlice p(zero_slice(f, 3));
    Rational last = 0;
    for (const auto& m : levels) {
      Rational v = *p.integrate(exact_spec(m)).exact;
      CHECK(v >= last);
      last = v;
    }
  }
  // Also through the counterexample's schedule.
  PreparedSlice c(zero_slice(catalog::counterexample(), 15));
  Rational last = 0;
  for (int e = 0; e <= 20; ++e) {
    Rational v = *c.integrate(exact_spec(Extended(pow(Rational(2), e)))).exact;
    CHECK(v >= last);
    last = v;
  }
}

TEST_CASE("property: exact integration is linear") {
  std::mt19937_64 rng(33);
  for (int k = 0; k < 100; ++k) {
    Function f = random_function(rng, 3, true), g = random_function(rng, 3, true);
    Rational a = grid_value(rng, -2, 2), b = grid_value(rng, -2, 2);
    Anchor anchor{random_point(rng, 6, 0, 1), Cell{}};
    std::size_t n = 4;
    try {
      Rational lhs = *integrate_slice(slice(scale(a, f) + scale(b, g), anchor, n), exact_spec()).exact;
      Rational rf = *integrate_slice(slice(f, anchor, n), exact_spec()).exact;
      Rational rg = *integrate_slice(slice(g, anchor, n), exact_spec()).exact;
      CHECK(lhs == a * rf + b * rg);
    } catch (const Error& e) {
      // Clamp nodes have no exact rule; series may not converge at the anchor.
      CHECK((e.kind() == ErrorKind::FormNotExact || e.kind() == ErrorKind::SeriesNotSummable));
    }
  }
}

TEST_CASE("property: padding with unused coordinates keeps the value") {
  std::mt19937_64 rng(34);
  for (int k = 0; k < 100; ++k) {
    Function f = random_step(rng, 3, false);
    Extended m = k % 2 ? Extended(1) : Extended::infinity();
    Rational base = *integrate_slice(zero_slice(f, 2), exact_spec(m)).exact;
    for (std::size_t n = 3; n <= 8; ++n) CHECK(*integrate_slice(zero_slice(f, n), exact_spec(m)).exact == base);
  }
}

TEST_CASE("QMC is reproducible for a fixed seed") {
  Function f = index_product(0, 4, Piecewise::identity());
  QuadratureSpec s;
  s.mode = QuadMode::Qmc;
  SliceIntegral a = integrate_slice(zero_slice(f, 4), s), b = integrate_slice(zero_slice(f, 4), s);
  CHECK(a.value == b.value);
  CHECK(std::abs(a.value - 1.0 / 32) <= a.error);
}
