#pragma once

#include <random>

#include "linf/function.hpp"
#include "test_support.hpp"

namespace linf::testing {

/// Value on the grid k/6 inside [lo, hi].
inline Rational grid_value(std::mt19937_64& rng, int lo, int hi) {
  std::uniform_int_distribution<int> pick(lo * 6, hi * 6);
  return ratio(pick(rng), 6);
}

/// Point with a few explicit coordinates below `coords` and a tail, all on the
/// grid so they hit interval endpoints often.
inline Point random_point(std::mt19937_64& rng, int coords, int lo = -1, int hi = 2) {
  Point p;
  std::uniform_int_distribution<int> count(0, coords);
  std::uniform_int_distribution<int> index(0, coords);
  for (int k = count(rng); k > 0; --k) p.coords[static_cast<Index>(index(rng))] = grid_value(rng, lo, hi);
  p.tail = grid_value(rng, lo, hi);
  return p;
}

inline Polynomial random_polynomial(std::mt19937_64& rng, int max_degree) {
  std::uniform_int_distribution<int> deg(0, max_degree), c(-4, 4);
  std::vector<Rational> coeffs;
  for (int k = deg(rng); k >= 0; --k) coeffs.push_back(ratio(c(rng), 2));
  return Polynomial(coeffs);
}

/// Up to three disjoint pieces inside [-1, 2]. Constant pieces when `max_degree` is 0.
inline Piecewise random_piecewise(std::mt19937_64& rng, int max_degree) {
  std::vector<Rational> cuts;
  std::uniform_int_distribution<int> count(1, 3);
  int pieces = count(rng);
  for (int k = 0; k < 2 * pieces; ++k) cuts.push_back(grid_value(rng, -1, 2));
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::bernoulli_distribution coin(0.5);
  std::vector<Piece> out;
  for (std::size_t k = 0; k + 1 < cuts.size(); k += 2) {
    out.push_back({Interval::make(cuts[k], coin(rng), cuts[k + 1], coin(rng)), random_polynomial(rng, max_degree)});
  }
  return Piecewise(out);
}

inline Piecewise random_bounded_constant_piecewise(std::mt19937_64& rng) {
  Piecewise p = random_piecewise(rng, 0);
  std::vector<Piece> out;
  std::uniform_int_distribution<int> c(-2, 2);
  for (const auto& pc : p.pieces()) out.push_back({pc.domain, Polynomial::constant(ratio(c(rng), 2))});
  return Piecewise(out);
}

/// Series with |below|, |at| <= 1 and |base| <= 1/2, carrying a valid tail bound.
inline Function random_series(std::mt19937_64& rng) {
  Series s;
  std::uniform_int_distribution<int> first(0, 3), sc(-3, 3), base(-2, 2);
  s.first = static_cast<Index>(first(rng));
  Rational total = 0;
  for (int j = 0; j < 2; ++j) {
    Rational a = sc(rng), b = ratio(base(rng), 4);
    s.coefficient.emplace_back(a, b);
    total += abs(a);
  }
  s.below = random_bounded_constant_piecewise(rng);
  s.at = random_bounded_constant_piecewise(rng);
  s.above = random_interval(rng, -1, 2);
  // sum_{k>n} |c(k)| <= total * (1/2)^(n+1) / (1 - 1/2) = total * (1/2)^n
  s.tail_bound = TailBound{Extended(total), ratio(1, 2)};
  return series(std::move(s));
}

inline BoxUnion random_union(std::mt19937_64& rng, int boxes) {
  std::vector<Box> out;
  std::uniform_int_distribution<int> count(1, boxes);
  for (int k = count(rng); k > 0; --k) out.push_back(random_box(rng, 3));
  return BoxUnion(out);
}

/// Random expression tree. Structured trees avoid Coord and polynomial pieces,
/// so that their support is known.
inline Function random_function(std::mt19937_64& rng, int depth, bool structured = false) {
  std::uniform_int_distribution<int> kind(0, depth <= 0 ? 3 : 10);
  std::uniform_int_distribution<int> index(0, 5);
  auto idx = [&] { return static_cast<Index>(index(rng)); };
  switch (kind(rng)) {
    case 0: return constant(grid_value(rng, -2, 2));
    case 1: return structured ? indicator(random_union(rng, 2)) : coord(idx());
    case 2: return piecewise(idx(), random_piecewise(rng, structured ? 0 : 2));
    case 3: return indicator(random_union(rng, 2));
    case 4: return random_function(rng, depth - 1, structured) + random_function(rng, depth - 1, structured);
    case 5: return random_function(rng, depth - 1, structured) * random_function(rng, depth - 1, structured);
    case 6: return scale(grid_value(rng, -2, 2), random_function(rng, depth - 1, structured));
    case 7: {
      Index a = idx();
      return index_product(a, a + 2, random_piecewise(rng, structured ? 0 : 1));
    }
    case 8: return random_series(rng);
    case 9: return translate(random_function(rng, depth - 1, structured), random_shift(rng, 2));
    default: return clamp(random_function(rng, depth - 1, structured), Extended(ratio(3, 2)));
  }
}

// Integral over the line by antiderivatives, piece by piece.
inline Rational line_integral(const Piecewise& p) {
  Rational total = 0;
  for (const auto& pc : p.pieces()) {
    const auto& c = pc.poly.coeffs();
    for (std::size_t k = 0; k < c.size(); ++k) {
      long e = static_cast<long>(k + 1);
      total += c[k] * (pow(pc.domain.hi(), e) - pow(pc.domain.lo(), e)) / static_cast<long>(k + 1);
    }
  }
  return total;
}

struct Separable {
  Function f;
  Rational integral;
};

// c * prod_{i<d} p_i(x_i) * prod_{i>=d} 1{x_i in [0,1]}.
inline Separable random_separable(std::mt19937_64& rng, int d, int max_degree) {
  Rational c = grid_value(rng, 1, 2);
  std::vector<Function> factors;
  Rational value = c;
  std::map<Index, IntervalSet> free;
  for (int i = 0; i < d; ++i) {
    Piecewise p = random_piecewise(rng, max_degree);
    factors.push_back(piecewise(static_cast<Index>(i), p));
    value *= line_integral(p);
    free[static_cast<Index>(i)] = IntervalSet::whole();
  }
  factors.push_back(indicator(BoxUnion(Box(free, IntervalSet::unit()))));
  return {scale(c, product(factors)), value};
}

// Step function of coordinates 0..d-1 with values in [-3/2, 3/2] supported in the unit cell.
inline Function random_cylinder_step(std::mt19937_64& rng, int d, bool nonnegative) {
  std::uniform_int_distribution<int> terms(1, 3), c(nonnegative ? 0 : -3, 3);
  std::vector<Function> out;
  for (int t = terms(rng); t > 0; --t) {
    std::map<Index, IntervalSet> comps;
    for (int i = 0; i < d; ++i) comps[static_cast<Index>(i)] = random_interval(rng, 0, 1);
    out.push_back(scale(ratio(c(rng), 2), indicator(BoxUnion(Box(comps, IntervalSet::unit())))));
  }
  return sum(out);
}

}  // namespace linf::testing
