#include <doctest.h>

#include <random>

#include "linf/catalog.hpp"
#include "linf/error.hpp"
#include "linf/limit.hpp"
#include "random_functions.hpp"

using namespace linf;
using namespace linf::testing;

namespace {

Rational q(const char* s) { return parse_rational(s); }

const LimitSchedule& sched() {
  static const LimitSchedule s = LimitSchedule::defaults();
  return s;
}

}  // namespace

TEST_CASE("schedule validation") {
  LimitSchedule s = LimitSchedule::defaults();
  CHECK(s.n_values.size() == 65);
  CHECK(s.m_values.size() == 21);
  CHECK(s.window == 3);
  CHECK(s.epsilon == 1e-9);
  s.validate();
  s.window = 1;
  CHECK_THROWS_AS(s.validate(), Error);
  s = LimitSchedule::defaults();
  s.epsilon = 0;
  CHECK_THROWS_AS(s.validate(), Error);
  s = LimitSchedule::defaults();
  s.n_values = {3, 2};
  CHECK_THROWS_AS(s.validate(), Error);
  s = LimitSchedule::defaults();
  std::swap(s.m_values[0], s.m_values[1]);
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("cell integral examples") {
  CellIntegral c = integrate_cell(constant(q("5/2")), cell_at({}), std::nullopt, sched());
  CHECK(c.status == LimitStatus::Converged);
  REQUIRE(c.exact);
  CHECK(*c.exact == q("5/2"));
  // Every level's inner limit settles at n = 0 already.
  CHECK(c.levels.back().trace.front().exact == q("5/2"));

  CellIntegral f = integrate_cell(catalog::counterexample(), cell_at({}), std::nullopt, sched());
  CHECK(f.status == LimitStatus::Converged);
  CHECK(std::abs(f.value) < 1e-9);
  // Each level follows 3^(min(N, n0) + 1) / 3^(N + 1), n0 the last term value at most M.
  for (const auto& lv : f.levels) {
    long n0 = -1;
    while (Extended(n0 + 1 == 0 ? q("3/2") : 2 * pow(q("3/2"), n0 + 1)) <= lv.truncation) ++n0;
    for (const auto& r : lv.trace) {
      long n = static_cast<long>(r.n);
      Rational expect = n0 < 0 ? Rational(0) : pow(Rational(3), std::min(n, n0) + 1) / pow(Rational(3), n + 1);
      CHECK(*r.exact == expect);
    }
  }

  CellIntegral raw = integrate_cell(catalog::counterexample(), cell_at({}), std::nullopt, sched().untruncated());
  CHECK(raw.status == LimitStatus::Converged);
  REQUIRE(raw.exact);
  CHECK(*raw.exact == 1);

  CellIntegral xy = integrate_cell(coord(0) * coord(1), cell_at({}), std::nullopt, sched());
  CHECK(xy.status == LimitStatus::Converged);
  CHECK(std::abs(xy.value - 0.25) < 1e-9);
}

TEST_CASE("levels below a proven bound are skipped") {
  // |f| <= 5 on the cell, so M = 1, 2, 4 cannot matter and the run starts at 8.
  Function f = scale(5, coord(0) * coord(1));
  CellIntegral c = integrate_cell(f, cell_at({}), std::nullopt, sched());
  CHECK(c.status == LimitStatus::Converged);
  CHECK(c.bound == Rational(5));
  REQUIRE(c.levels.size() == 2);
  CHECK(c.levels[0].truncation == Extended(8));
  CHECK(std::abs(c.value - 1.25) < 1e-9);
  // A series has no bound, so every level runs from M = 1.
  CellIntegral s = integrate_cell(catalog::counterexample(), cell_at({}), std::nullopt, sched());
  CHECK_FALSE(s.bound);
  CHECK(s.levels.front().truncation == Extended(1));
}

TEST_CASE("integrability examples") {
  IntegrabilityReport unit = integrability_check(indicator(BoxUnion(Box::unit_cell())), sched());
  CHECK(unit.status == LimitStatus::Converged);
  CHECK(unit.absolute_exact == Rational(1));

  IntegrabilityReport f = integrability_check(catalog::counterexample(), sched());
  CHECK(f.status == LimitStatus::Converged);
  CHECK(std::abs(f.absolute_integral) < 1e-9);

  IntegrabilityReport wide = integrability_check(indicator(BoxUnion(Box({}, Interval::closed(0, 2)))), sched());
  CHECK(wide.status == LimitStatus::NotIntegrable);
  CHECK(wide.stage == "cover");

  IntegrabilityReport div = integrability_check(catalog::divergent_series(), sched());
  CHECK(div.status == LimitStatus::NotIntegrable);
  CHECK(div.stage == "absolute");

  try {
    integrability_check(coord(0), sched());
    FAIL("expected UnknownSupport");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownSupport);
  }
}

TEST_CASE("global integral examples") {
  IntegralResult unit = integrate_global(indicator(BoxUnion(Box::unit_cell())), sched());
  CHECK(unit.status == LimitStatus::Converged);
  CHECK(unit.exact == Rational(1));

  IntegralResult f = integrate_global(catalog::counterexample(), sched());
  CHECK(f.status == LimitStatus::Converged);
  CHECK(std::abs(f.value) < 1e-9);
  REQUIRE(f.untruncated.size() == 1);
  CHECK(f.untruncated[0].exact == Rational(1));
  CHECK(f.warnings.size() == 1);

  IntegralResult three =
      integrate_global(indicator(BoxUnion(Box({{0, Interval::closed(0, 3)}}, IntervalSet::unit()))), sched());
  CHECK(three.status == LimitStatus::Converged);
  CHECK(three.exact == Rational(3));
  CHECK(three.cells_used.size() == 3);

  IntegralResult div = integrate_global(catalog::divergent_series(), sched());
  CHECK(div.status == LimitStatus::NotIntegrable);
  REQUIRE(div.absolute_pieces.size() == 1);
  CHECK(div.absolute_pieces[0].status == LimitStatus::Diverged);

  // Unknown support integrates over given cells only.
  IntegralResult x0 = integrate_global(coord(0), sched(), std::vector<Cell>{cell_at({})});
  CHECK(x0.status == LimitStatus::Converged);
  CHECK(x0.exact == q("1/2"));
}

TEST_CASE("invariance examples") {
  Function unit = indicator(BoxUnion(Box::unit_cell()));
  InvarianceReport half = invariance_check(unit, SparseVector{{0, q("1/2")}}, sched());
  CHECK(half.pass);
  CHECK(half.original.exact == Rational(1));
  CHECK(half.translated.exact == Rational(1));
  CHECK(half.exact_difference == Rational(0));

  InvarianceReport none = invariance_check(unit, SparseVector{}, sched());
  CHECK(none.pass);
  CHECK(none.original.pieces.size() == none.translated.pieces.size());

  InvarianceReport f = invariance_check(catalog::counterexample(), SparseVector{{0, 1}}, sched());
  CHECK(f.pass);
  CHECK(std::abs(f.translated.value) < 1e-9);
}

TEST_CASE("property: cylinder functions are exact once n covers them") {
  std::mt19937_64 rng(41);
  for (int k = 0; k < 40; ++k) {
    int d = 1 + k % 4;
    Function f = random_cylinder_step(rng, d, false);
    CellIntegral c = integrate_cell(f, cell_at({}), std::nullopt, sched());
    REQUIRE(c.status == LimitStatus::Converged);
    QuadratureSpec exact;
    exact.mode = QuadMode::Exact;
    Rational direct = *integrate_slice(slice(f, Anchor{}, d - 1), exact).exact;
    CHECK(c.exact == direct);
    for (const auto& lv : c.levels) {
      if (lv.truncation.is_infinite() || Extended(q("3/2") * 3) <= lv.truncation) {
        for (const auto& r : lv.trace) {
          if (r.n + 1 >= static_cast<std::size_t>(d)) CHECK(*r.exact == direct);
        }
      }
    }
    // Another anchor gives the same exact value.
    Anchor other{random_point(rng, 6, 0, 1), cell_at({})};
    other.values.tail = q("1/2");
    CHECK(integrate_cell(f, cell_at({}), other, sched()).exact == direct);
  }
}

TEST_CASE("property: truncated limits grow with M for nonnegative f") {
  std::mt19937_64 rng(42);
  std::vector<Function> fs = {catalog::counterexample()};
  for (int k = 0; k < 20; ++k) fs.push_back(random_cylinder_step(rng, 3, true));
  for (const auto& f : fs) {
    CellIntegral c = integrate_cell(f, cell_at({}), std::nullopt, sched());
    for (std::size_t j = 1; j < c.levels.size(); ++j) CHECK(c.levels[j].value >= c.levels[j - 1].value);
  }
}

TEST_CASE("property: the global integral is the sum over cover pieces") {
  std::mt19937_64 rng(43);
  for (int k = 0; k < 25; ++k) {
    Function f = random_function(rng, 2, true);
    Support s = support(f);
    if (sigma_cover(s.sets).status != CoverStatus::Finite) continue;
    IntegralResult g = integrate_global(f, sched());
    if (g.status != LimitStatus::Converged) continue;
    double sum = 0;
    std::optional<Rational> exact = Rational(0);
    for (const auto& p : g.pieces) {
      CellIntegral c = integrate_cell(f, p.cell, std::nullopt, sched(), false, p.piece);
      sum += c.value;
      if (exact && c.exact) {
        *exact += *c.exact;
      } else {
        exact.reset();
      }
    }
    INFO(f.str());
    if (g.exact && exact) {
      CHECK(*g.exact == *exact);
    } else {
      CHECK(std::abs(g.value - sum) <= 1e-9 * std::max<std::size_t>(g.pieces.size(), 1));
    }
  }
}

TEST_CASE("results do not depend on the thread count") {
  Function f = indicator(BoxUnion(Box({{0, Interval::closed(0, 3)}, {1, Interval::closed(-1, q("3/2"))}},
                                      IntervalSet::unit())));
  setenv("LINF_THREADS", "1", 1);
  IntegralResult one = integrate_global(f, sched());
  setenv("LINF_THREADS", "4", 1);
  IntegralResult four = integrate_global(f, sched());
  unsetenv("LINF_THREADS");
  CHECK(one.exact == four.exact);
  CHECK(one.exact == Rational(3) * q("5/2"));
  CHECK(one.value == four.value);
}
