#include "linf/catalog.hpp"

namespace linf::catalog {

Function counterexample() {
  IntervalSet low = Interval::closed(0, ratio(1, 3));
  IntervalSet high = Interval::closed(ratio(2, 3), 1);
  IntervalSet s = unite(low, high);
  Function head = scale(ratio(3, 2), indicator(BoxUnion(Box({{0, s}}, low))));
  Series rest;
  rest.first = 1;
  rest.coefficient = {{2, ratio(3, 2)}};
  rest.below = Piecewise::indicator(s);
  rest.at = Piecewise::indicator(high);
  rest.above = low;
  rest.tail_bound = TailBound{Extended::infinity(), 0};
  return head + series(std::move(rest));
}

Function divergent_series() {
  Series s;
  s.first = 0;
  s.coefficient = {{2, 2}};
  s.below = Piecewise::indicator(Interval::closed(0, ratio(1, 2)));
  s.at = Piecewise::indicator(Interval::make(ratio(1, 2), false, Rational(1), true));
  s.above = IntervalSet::unit();
  s.tail_bound = TailBound{Extended::infinity(), 0};
  return series(std::move(s));
}

std::optional<Function> by_name(const std::string& name) {
  if (name == "counterexample") return counterexample();
  if (name == "divergent") return divergent_series();
  return std::nullopt;
}

std::vector<std::string> names() { return {"counterexample", "divergent"}; }

}  // namespace linf::catalog
