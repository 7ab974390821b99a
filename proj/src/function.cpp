#include "linf/function.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "linf/error.hpp"

namespace linf {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

Function make(auto node) { return Function(std::make_shared<const Node>(Node{std::move(node)})); }

const Constant* as_exact_constant(const Function& f) {
  const auto* c = std::get_if<Constant>(&f.node().v);
  return c && !c->real ? c : nullptr;
}

const IntervalSet kUnit = IntervalSet::unit();

}  // namespace

Function::Function() : node_(std::make_shared<const Node>(Node{Constant{}})) {}

Rational Series::coefficient_at(Index n) const {
  Rational c = 0;
  for (const auto& [s, b] : coefficient) c += s * pow(b, static_cast<long>(n));
  return c;
}

Function constant(const Rational& c) { return make(Constant{c, std::nullopt}); }

Function real_constant(double c) {
  if (!std::isfinite(c)) throw Error(ErrorKind::Domain, "constant must be finite");
  return make(Constant{0, c});
}

Function coord(Index i) { return make(Coord{i}); }

Function sum(std::vector<Function> terms) {
  std::vector<Function> flat;
  Rational c = 0;
  for (auto& t : terms) {
    if (const auto* k = as_exact_constant(t)) {
      c += k->exact;
    } else if (const auto* s = std::get_if<Sum>(&t.node().v)) {
      flat.insert(flat.end(), s->terms.begin(), s->terms.end());
    } else {
      flat.push_back(std::move(t));
    }
  }
  if (sgn(c) != 0) flat.push_back(constant(c));
  if (flat.empty()) return constant(0);
  if (flat.size() == 1) return flat.front();
  return make(Sum{std::move(flat)});
}

Function product(std::vector<Function> factors) {
  std::vector<Function> flat;
  Rational c = 1;
  for (auto& f : factors) {
    if (const auto* k = as_exact_constant(f)) {
      c *= k->exact;
    } else if (const auto* s = std::get_if<Scale>(&f.node().v)) {
      c *= s->by;
      flat.push_back(s->of);
    } else if (const auto* p = std::get_if<Product>(&f.node().v)) {
      flat.insert(flat.end(), p->factors.begin(), p->factors.end());
    } else {
      flat.push_back(std::move(f));
    }
  }
  if (sgn(c) == 0) return constant(0);
  if (flat.empty()) return constant(c);
  Function body = flat.size() == 1 ? flat.front() : make(Product{std::move(flat)});
  return c == 1 ? body : scale(c, body);
}

Function scale(const Rational& by, Function of) {
  if (sgn(by) == 0) return constant(0);
  if (by == 1) return of;
  if (const auto* k = as_exact_constant(of)) return constant(by * k->exact);
  if (const auto* s = std::get_if<Scale>(&of.node().v)) return scale(by * s->by, s->of);
  return make(Scale{by, std::move(of)});
}

Function difference(Function a, Function b) { return sum({std::move(a), scale(-1, std::move(b))}); }

Function piecewise(Index i, Piecewise fn) {
  if (fn.is_zero()) return constant(0);
  return make(UnaryPiecewise{i, std::move(fn)});
}

Function indicator(BoxUnion set) {
  std::erase_if(set.boxes, [](const Box& b) { return b.is_empty(); });
  if (set.boxes.empty()) return constant(0);
  return make(Indicator{std::move(set)});
}

Function index_product(Index first, Index last, Piecewise fn) {
  if (last < first) return constant(1);
  return make(IndexProduct{first, last, std::move(fn)});
}

Function series(Series s) {
  if (s.tail_bound) {
    const auto& b = *s.tail_bound;
    if (!b.scale.is_infinite() && !b.scale.is_zero() && (sgn(b.ratio) < 0 || b.ratio >= 1)) {
      throw Error(ErrorKind::Domain, "series tail bound must be nonnegative and decrease to 0");
    }
  }
  return make(std::move(s));
}

Function translate(Function of, SparseVector by) {
  if (by.is_zero()) return of;
  return make(Translate{std::move(by), std::move(of)});
}

Function clamp(Function of, Extended bound) { return make(Clamp{std::move(bound), std::move(of)}); }

Function operator+(Function a, Function b) { return sum({std::move(a), std::move(b)}); }
Function operator*(Function a, Function b) { return product({std::move(a), std::move(b)}); }

// ---------------------------------------------------------------- evaluation

namespace {

Point shifted(const Point& x, const SparseVector& t) {
  Point out = x;
  for (const auto& [i, v] : t.entries()) out.coords[i] = x.at(i) + v;
  return out;
}

// Value of term k at x, with the infinite product over i > k read from the
// explicit coordinates and the tail value.
Rational series_term(const Series& s, Index k, const Point& x) {
  Rational c = s.coefficient_at(k);
  if (sgn(c) == 0) return 0;
  if (!s.above.contains(x.tail)) return 0;
  for (auto it = x.coords.upper_bound(k); it != x.coords.end(); ++it) {
    if (!s.above.contains(it->second)) return 0;
  }
  c *= s.at(x.at(k));
  for (Index i = 0; i < k && sgn(c) != 0; ++i) c *= s.below(x.at(i));
  return c;
}

Rational series_value(const Series& s, const Point& x, std::optional<Index> cutoff) {
  if (!s.tail_bound) throw Error(ErrorKind::SeriesNotSummable, "series has no tail bound");
  if (cutoff) {
    Rational total = 0;
    for (Index k = s.first; k <= *cutoff; ++k) total += series_term(s, k, x);
    return total;
  }
  Index end = x.explicit_end();
  Index k0 = std::max(end, s.first);
  Rational total = 0;
  for (Index k = s.first; k <= k0; ++k) total += series_term(s, k, x);

  // Terms k > k0 see the tail value on every coordinate from `end` on:
  // c(k) * P * beta^(k - end) * at(tail) * 1{tail in above}.
  Rational lead = s.at(x.tail);
  if (!s.above.contains(x.tail)) lead = 0;
  for (Index i = 0; i < end && sgn(lead) != 0; ++i) lead *= s.below(x.at(i));
  Rational beta = s.below(x.tail);
  if (sgn(lead) == 0 || sgn(beta) == 0) return total;
  Rational rest = 0;
  for (const auto& [sc, base] : s.coefficient) {
    if (sgn(sc) == 0) continue;
    Rational r = base * beta;
    if (abs(r) >= 1) {
      throw Error(ErrorKind::SeriesNotSummable, "series terms do not decay at the point (ratio " + r.get_str() + ")");
    }
    rest += sc * pow(r, static_cast<long>(k0 + 1)) / (1 - r);
  }
  return total + lead * rest * pow(beta, -static_cast<long>(end));
}

Rational exact_at(const Function& f, const Point& x, std::optional<Index> cutoff) {
  return std::visit(
      overloaded{
          [&](const Constant& c) -> Rational {
            if (c.real) throw Error(ErrorKind::FormNotExact, "real constant in exact evaluation");
            return c.exact;
          },
          [&](const Coord& c) -> Rational { return x.at(c.index); },
          [&](const Sum& s) -> Rational {
            Rational t = 0;
            for (const auto& g : s.terms) t += exact_at(g, x, cutoff);
            return t;
          },
          [&](const Product& p) -> Rational {
            Rational t = 1;
            for (const auto& g : p.factors) {
              t *= exact_at(g, x, cutoff);
              if (sgn(t) == 0) break;
            }
            return t;
          },
          [&](const Scale& s) -> Rational { return s.by * exact_at(s.of, x, cutoff); },
          [&](const UnaryPiecewise& u) -> Rational { return u.fn(x.at(u.coord)); },
          [&](const Indicator& ind) -> Rational {
            for (const auto& b : ind.set.boxes) {
              if (b.contains(x)) return 1;
            }
            return 0;
          },
          [&](const IndexProduct& p) -> Rational {
            Rational t = 1;
            for (Index i = p.first; i <= p.last && sgn(t) != 0; ++i) t *= p.fn(x.at(i));
            return t;
          },
          [&](const Series& s) -> Rational { return series_value(s, x, cutoff); },
          [&](const Translate& t) -> Rational { return exact_at(t.of, shifted(x, t.by), cutoff); },
          [&](const Clamp& c) -> Rational {
            Rational v = exact_at(c.of, x, cutoff);
            return Extended(abs(v)) <= c.bound ? v : Rational(0);
          },
      },
      f.node().v);
}

double real_at(const Function& f, const Point& x) {
  return std::visit(
      overloaded{
          [&](const Constant& c) -> double { return c.real ? *c.real : c.exact.get_d(); },
          [&](const Sum& s) -> double {
            double t = 0;
            for (const auto& g : s.terms) t += real_at(g, x);
            return t;
          },
          [&](const Product& p) -> double {
            double t = 1;
            for (const auto& g : p.factors) t *= real_at(g, x);
            return t;
          },
          [&](const Scale& s) -> double { return s.by.get_d() * real_at(s.of, x); },
          [&](const Translate& t) -> double { return real_at(t.of, shifted(x, t.by)); },
          [&](const Clamp& c) -> double {
            double v = real_at(c.of, x);
            return c.bound.is_infinite() || std::abs(v) <= c.bound.to_double() ? v : 0.0;
          },
          [&](const auto&) -> double { return exact_at(f, x, std::nullopt).get_d(); },
      },
      f.node().v);
}

}  // namespace

bool is_exact(const Function& f) {
  return std::visit(overloaded{
                        [](const Constant& c) { return !c.real; },
                        [](const Sum& s) {
                          return std::all_of(s.terms.begin(), s.terms.end(), [](const Function& g) { return is_exact(g); });
                        },
                        [](const Product& p) {
                          return std::all_of(p.factors.begin(), p.factors.end(),
                                             [](const Function& g) { return is_exact(g); });
                        },
                        [](const Scale& s) { return is_exact(s.of); },
                        [](const Translate& t) { return is_exact(t.of); },
                        [](const Clamp& c) { return is_exact(c.of); },
                        [](const auto&) { return true; },
                    },
                    f.node().v);
}

Rational eval_exact(const Function& f, const Point& x) { return exact_at(f, x, std::nullopt); }

double eval(const Function& f, const Point& x) {
  if (is_exact(f)) return exact_at(f, x, std::nullopt).get_d();
  return real_at(f, x);
}

Rational eval_partial(const Function& f, const Point& x, Index cutoff) { return exact_at(f, x, cutoff); }

// --------------------------------------------------------- sliced functions

namespace {

template <class T>
T finite_at(const Function& f, std::span<const T> x) {
  return std::visit(
      overloaded{
          [&](const Constant& c) -> T {
            if constexpr (std::is_same_v<T, double>) {
              return c.real ? *c.real : c.exact.get_d();
            } else {
              if (c.real) throw Error(ErrorKind::FormNotExact, "real constant in exact evaluation");
              return c.exact;
            }
          },
          [&](const UnaryPiecewise& u) -> T {
            if (u.coord >= x.size()) throw Error(ErrorKind::Domain, "slice reads a coordinate past its dimension");
            return u.fn(x[u.coord]);
          },
          [&](const Sum& s) -> T {
            T t = 0;
            for (const auto& g : s.terms) t += finite_at(g, x);
            return t;
          },
          [&](const Product& p) -> T {
            T t = 1;
            for (const auto& g : p.factors) {
              t *= finite_at(g, x);
              if (t == 0) break;
            }
            return t;
          },
          [&](const Scale& s) -> T {
            if constexpr (std::is_same_v<T, double>) {
              return s.by.get_d() * finite_at(s.of, x);
            } else {
              return s.by * finite_at(s.of, x);
            }
          },
          [&](const Clamp& c) -> T {
            T v = finite_at(c.of, x);
            if constexpr (std::is_same_v<T, double>) {
              return c.bound.is_infinite() || std::abs(v) <= c.bound.to_double() ? v : 0.0;
            } else {
              return Extended(abs(v)) <= c.bound ? v : T(0);
            }
          },
          [&](const auto&) -> T { throw Error(ErrorKind::Domain, "node not allowed in a sliced function"); },
      },
      f.node().v);
}

void collect_active(const Function& f, std::set<Index>& out) {
  std::visit(overloaded{
                 [&](const UnaryPiecewise& u) { out.insert(u.coord); },
                 [&](const Sum& s) {
                   for (const auto& g : s.terms) collect_active(g, out);
                 },
                 [&](const Product& p) {
                   for (const auto& g : p.factors) collect_active(g, out);
                 },
                 [&](const Scale& s) { collect_active(s.of, out); },
                 [&](const Clamp& c) { collect_active(c.of, out); },
                 [&](const auto&) {},
             },
             f.node().v);
}

}  // namespace

double SlicedFunction::operator()(std::span<const double> x) const { return finite_at<double>(body, x); }

Rational SlicedFunction::exact(std::span<const Rational> x) const { return finite_at<Rational>(body, x); }

std::vector<Index> SlicedFunction::active() const {
  std::set<Index> s;
  collect_active(body, s);
  return {s.begin(), s.end()};
}

// ------------------------------------------------------------------- slicing

namespace {

struct Frame {
  Point d;  // cell corner
  Point a;  // anchor
  std::size_t n = 0;
};

// fn(d + x) on the unit interval as a factor on coordinate i.
Function unit_factor(Index i, const Piecewise& fn, const Rational& d) {
  Piecewise local = fn.shifted(d).restricted(kUnit);
  if (local.is_zero()) return constant(0);
  if (local.is_one_on_unit()) return constant(1);
  return piecewise(i, std::move(local));
}

Function slice_node(const Function& f, const Frame& fr);

Function slice_indicator(const Indicator& ind, const Frame& fr) {
  std::vector<Box> finite;
  for (const auto& b : ind.set.boxes) {
    if (b.is_empty() || !b.tail().contains(fr.a.tail)) continue;
    bool alive = true;
    for (const auto& [i, v] : fr.a.coords) {
      if (i > fr.n && !b.component(i).contains(v)) alive = false;
    }
    for (const auto& [i, comp] : b.explicit_components()) {
      if (i > fr.n && !comp.contains(fr.a.at(i))) alive = false;
    }
    if (!alive) continue;
    std::map<Index, IntervalSet> comps;
    std::optional<IntervalSet> plain;  // tail seen from a coordinate at the plain corner
    for (Index i = 0; i <= fr.n && alive; ++i) {
      IntervalSet local;
      bool is_plain = !b.explicit_components().count(i) && !fr.d.coords.count(i);
      if (is_plain && plain) {
        local = *plain;
      } else {
        local = intersect(b.component(i).translated(-fr.d.at(i)), kUnit);
        if (is_plain) plain = local;
      }
      if (local.is_empty()) alive = false;
      if (local != kUnit) comps[i] = std::move(local);
    }
    if (alive) finite.emplace_back(std::move(comps), IntervalSet::whole());
  }
  std::vector<Function> terms;
  for (const auto& b : disjointify(BoxUnion(finite)).boxes) {
    std::vector<Function> factors;
    for (const auto& [i, comp] : b.explicit_components()) factors.push_back(piecewise(i, Piecewise::indicator(comp)));
    terms.push_back(product(std::move(factors)));
  }
  return sum(std::move(terms));
}

Function slice_series(const Series& s, const Frame& fr) {
  if (!s.tail_bound) throw Error(ErrorKind::SeriesNotSummable, "series has no tail bound");
  const std::size_t n = fr.n;
  const Point& a = fr.a;
  Piecewise above = Piecewise::indicator(s.above);

  // Factors on the slice coordinates, one per role.
  std::vector<Function> below(n + 1), at(n + 1), over(n + 1);
  for (Index i = 0; i <= n; ++i) {
    Rational d = fr.d.at(i);
    below[i] = unit_factor(i, s.below, d);
    at[i] = unit_factor(i, s.at, d);
    over[i] = unit_factor(i, above, d);
  }
  auto above_beyond = [&](Index from) {  // prod_{i > from} 1{a_i in above}
    if (!s.above.contains(a.tail)) return false;
    for (auto it = a.coords.upper_bound(from); it != a.coords.end(); ++it) {
      if (!s.above.contains(it->second)) return false;
    }
    return true;
  };

  std::vector<Function> terms;
  if (above_beyond(n)) {
    for (Index k = s.first; k <= n; ++k) {
      Rational c = s.coefficient_at(k);
      if (sgn(c) == 0) continue;
      std::vector<Function> factors;
      for (Index i = 0; i < k; ++i) factors.push_back(below[i]);
      factors.push_back(at[k]);
      for (Index i = k + 1; i <= n; ++i) factors.push_back(over[i]);
      terms.push_back(scale(c, product(std::move(factors))));
    }
  }

  // Terms k > n only read the slice through prod_{i<=n} below(d_i + x_i).
  Index end = std::max<Index>(n + 1, a.explicit_end());
  Rational gamma = 0;
  for (Index k = std::max<Index>(s.first, n + 1); k < end; ++k) {
    Rational c = s.coefficient_at(k);
    if (sgn(c) == 0 || !above_beyond(k)) continue;
    c *= s.at(a.at(k));
    for (Index i = n + 1; i < k && sgn(c) != 0; ++i) c *= s.below(a.at(i));
    gamma += c;
  }
  Rational lead = s.above.contains(a.tail) ? s.at(a.tail) : Rational(0);
  for (Index i = n + 1; i < end && sgn(lead) != 0; ++i) lead *= s.below(a.at(i));
  Rational beta = s.below(a.tail);
  Index k1 = std::max<Index>(s.first, end);
  if (sgn(lead) != 0) {
    if (sgn(beta) == 0) {
      if (k1 == end) gamma += lead * s.coefficient_at(end);
    } else {
      for (const auto& [sc, base] : s.coefficient) {
        if (sgn(sc) == 0) continue;
        Rational r = base * beta;
        if (abs(r) >= 1) {
          throw Error(ErrorKind::SeriesNotSummable, "series terms do not decay at the anchor (ratio " + r.get_str() + ")");
        }
        gamma += lead * sc * pow(beta, -static_cast<long>(end)) * pow(r, static_cast<long>(k1)) / (1 - r);
      }
    }
  }
  if (sgn(gamma) != 0) {
    std::vector<Function> factors(below.begin(), below.end());
    terms.push_back(scale(gamma, product(std::move(factors))));
  }
  return sum(std::move(terms));
}

Function slice_node(const Function& f, const Frame& fr) {
  return std::visit(
      overloaded{
          [&](const Constant&) { return f; },
          [&](const Coord& c) {
            if (c.index > fr.n) return constant(fr.a.at(c.index));
            return unit_factor(c.index, Piecewise::identity(), fr.d.at(c.index));
          },
          [&](const Sum& s) {
            std::vector<Function> out;
            for (const auto& g : s.terms) out.push_back(slice_node(g, fr));
            return sum(std::move(out));
          },
          [&](const Product& p) {
            std::vector<Function> out;
            for (const auto& g : p.factors) {
              out.push_back(slice_node(g, fr));
              if (const auto* k = as_exact_constant(out.back()); k && sgn(k->exact) == 0) return constant(0);
            }
            return product(std::move(out));
          },
          [&](const Scale& s) { return scale(s.by, slice_node(s.of, fr)); },
          [&](const UnaryPiecewise& u) {
            if (u.coord > fr.n) return constant(u.fn(fr.a.at(u.coord)));
            return unit_factor(u.coord, u.fn, fr.d.at(u.coord));
          },
          [&](const Indicator& ind) { return slice_indicator(ind, fr); },
          [&](const IndexProduct& p) {
            std::vector<Function> out;
            for (Index i = p.first; i <= p.last; ++i) {
              out.push_back(i > fr.n ? constant(p.fn(fr.a.at(i))) : unit_factor(i, p.fn, fr.d.at(i)));
            }
            return product(std::move(out));
          },
          [&](const Series& s) { return slice_series(s, fr); },
          [&](const Translate& t) {
            Frame moved{shifted(fr.d, t.by), shifted(fr.a, t.by), fr.n};
            return slice_node(t.of, moved);
          },
          [&](const Clamp& c) { return clamp(slice_node(c.of, fr), c.bound); },
      },
      f.node().v);
}

}  // namespace

SlicedFunction slice(const Function& f, const Anchor& anchor, std::size_t n) {
  Frame fr{anchor.cell.corner_point(), anchor.values, n};
  return SlicedFunction{n + 1, slice_node(f, fr)};
}

// ------------------------------------------------------------------- support

Support support(const Function& f) {
  auto known = [](BoxUnion u) {
    std::erase_if(u.boxes, [](const Box& b) { return b.is_empty(); });
    return Support{true, std::move(u)};
  };
  return std::visit(
      overloaded{
          [&](const Constant& c) {
            bool zero = c.real ? *c.real == 0.0 : sgn(c.exact) == 0;
            return zero ? known({}) : known(Box::whole());
          },
          [&](const Coord&) { return Support{}; },
          [&](const Sum& s) {
            BoxUnion out;
            for (const auto& g : s.terms) {
              Support part = support(g);
              if (!part.known) return Support{};
              out.boxes.insert(out.boxes.end(), part.sets.boxes.begin(), part.sets.boxes.end());
            }
            return known(std::move(out));
          },
          [&](const Product& p) {
            std::optional<BoxUnion> out;
            for (const auto& g : p.factors) {
              Support part = support(g);
              if (!part.known) continue;
              out = out ? intersect(*out, part.sets) : part.sets;
            }
            return out ? known(std::move(*out)) : Support{};
          },
          [&](const Scale& s) { return sgn(s.by) == 0 ? known({}) : support(s.of); },
          [&](const UnaryPiecewise& u) {
            return known(Box({{u.coord, u.fn.nonzero_set()}}, IntervalSet::whole()));
          },
          [&](const Indicator& ind) { return known(ind.set); },
          [&](const IndexProduct& p) {
            std::map<Index, IntervalSet> comps;
            for (Index i = p.first; i <= p.last; ++i) comps[i] = p.fn.nonzero_set();
            return known(Box(std::move(comps), IntervalSet::whole()));
          },
          [&](const Series& s) {
            bool zero = std::all_of(s.coefficient.begin(), s.coefficient.end(),
                                    [](const auto& c) { return sgn(c.first) == 0; });
            if (zero) return known({});
            // Coordinatewise hull over all terms: coordinate i is "below" for
            // k > i, "at" for k = i and "above" for first <= k < i.
            IntervalSet nb = s.below.nonzero_set(), na = s.at.nonzero_set();
            std::map<Index, IntervalSet> comps;
            for (Index i = 0; i < s.first; ++i) comps[i] = nb;
            comps[s.first] = unite(nb, na);
            return known(Box(std::move(comps), unite(unite(nb, na), s.above)));
          },
          [&](const Translate& t) {
            Support inner = support(t.of);
            if (!inner.known) return inner;
            return known(translate(inner.sets, -t.by));
          },
          [&](const Clamp& c) { return support(c.of); },
      },
      f.node().v);
}

CoverResult sigma_cover(const BoxUnion& s) {
  CoverResult out;
  std::set<Cell> cells;
  for (const auto& b : disjointify(s).boxes) {
    if (b.is_empty()) continue;
    Extended m = measure(b);
    bool unbounded = false;
    for (const auto& [i, comp] : b.explicit_components()) unbounded = unbounded || !comp.bounded();
    Interval hull = b.tail().hull();
    bool wide = !hull.bounded() || hull.length() > Extended(1);
    if (wide || unbounded) {
      if (m.is_zero()) continue;  // null: the cover may skip it
      if (b.tail().length() > Extended(1)) {
        return {CoverStatus::NotSigmaFinite, {}, "box " + b.str() + " has a tail longer than 1"};
      }
      return {CoverStatus::Infinite, {}, "box " + b.str() + " meets infinitely many cells"};
    }
    for (const auto& cp : cell_decompose(BoxUnion(b))) cells.insert(cp.cell);
  }
  out.cells.assign(cells.begin(), cells.end());
  return out;
}

// -------------------------------------------------------------- substitution

namespace {

struct Renumber {
  const std::map<Index, Rational>& fixed;

  bool is_fixed(Index i) const { return fixed.count(i) > 0; }
  Index operator()(Index i) const {
    Index below = 0;
    for (const auto& [j, v] : fixed) {
      if (j < i) ++below;
    }
    return i - below;
  }
  // Number of free coordinates with index <= i.
  Index free_through(Index i) const { return (*this)(i + 1); }
};

Function substitute_box(const Box& b, const Renumber& r) {
  for (const auto& [j, v] : r.fixed) {
    if (!b.component(j).contains(v)) return constant(0);
  }
  std::map<Index, IntervalSet> comps;
  for (const auto& [i, comp] : b.explicit_components()) {
    if (!r.is_fixed(i)) comps[r(i)] = comp;
  }
  return indicator(BoxUnion(Box(std::move(comps), b.tail())));
}

Function substitute_node(const Function& f, const Renumber& r);

Function substitute_series(const Series& s, const Renumber& r) {
  if (r.fixed.empty()) return series(s);
  const Index m = r.fixed.rbegin()->first + 1;
  const Index count = r.fixed.size();
  Piecewise above = Piecewise::indicator(s.above);
  std::vector<Function> terms;
  // Terms whose special coordinate sits below the last fixed one, one by one.
  for (Index k = s.first; k < m; ++k) {
    Rational c = s.coefficient_at(k);
    if (sgn(c) == 0) continue;
    std::vector<Function> factors;
    for (Index i = 0; i <= k; ++i) {
      const Piecewise& fn = i < k ? s.below : s.at;
      auto it = r.fixed.find(i);
      factors.push_back(it != r.fixed.end() ? constant(fn(it->second)) : piecewise(r(i), fn));
    }
    for (const auto& [j, v] : r.fixed) {
      if (j > k && !s.above.contains(v)) factors.push_back(constant(0));
    }
    // prod over free coordinates beyond k of 1{x in above}.
    std::map<Index, IntervalSet> comps;
    for (Index j = 0; j < r.free_through(k); ++j) comps[j] = IntervalSet::whole();
    factors.push_back(indicator(BoxUnion(Box(std::move(comps), s.above))));
    terms.push_back(scale(c, product(std::move(factors))));
  }
  // Terms k >= m: every fixed coordinate plays "below", free ones shift down.
  Rational lead = 1;
  for (const auto& [j, v] : r.fixed) lead *= s.below(v);
  if (sgn(lead) != 0) {
    Series rest = s;
    rest.first = std::max(s.first, m) - count;
    for (auto& [sc, base] : rest.coefficient) sc *= lead * pow(base, static_cast<long>(count));
    if (rest.tail_bound) {
      rest.tail_bound->scale =
          rest.tail_bound->scale * Extended(abs(lead) * pow(rest.tail_bound->ratio, static_cast<long>(count)));
    }
    terms.push_back(series(std::move(rest)));
  }
  return sum(std::move(terms));
}

Function substitute_node(const Function& f, const Renumber& r) {
  return std::visit(
      overloaded{
          [&](const Constant&) { return f; },
          [&](const Coord& c) {
            auto it = r.fixed.find(c.index);
            return it != r.fixed.end() ? constant(it->second) : coord(r(c.index));
          },
          [&](const Sum& s) {
            std::vector<Function> out;
            for (const auto& g : s.terms) out.push_back(substitute_node(g, r));
            return sum(std::move(out));
          },
          [&](const Product& p) {
            std::vector<Function> out;
            for (const auto& g : p.factors) out.push_back(substitute_node(g, r));
            return product(std::move(out));
          },
          [&](const Scale& s) { return scale(s.by, substitute_node(s.of, r)); },
          [&](const UnaryPiecewise& u) {
            auto it = r.fixed.find(u.coord);
            return it != r.fixed.end() ? constant(u.fn(it->second)) : piecewise(r(u.coord), u.fn);
          },
          [&](const Indicator& ind) {
            std::vector<Function> parts;
            BoxUnion d = disjointify(ind.set);
            for (const auto& b : d.boxes) parts.push_back(substitute_box(b, r));
            return sum(std::move(parts));
          },
          [&](const IndexProduct& p) {
            std::vector<Function> out;
            for (Index i = p.first; i <= p.last; ++i) {
              auto it = r.fixed.find(i);
              out.push_back(it != r.fixed.end() ? constant(p.fn(it->second)) : piecewise(r(i), p.fn));
            }
            return product(std::move(out));
          },
          [&](const Series& s) { return substitute_series(s, r); },
          [&](const Translate& t) {
            std::map<Index, Rational> moved = r.fixed;
            SparseVector rest;
            for (auto& [j, v] : moved) v += t.by.at(j);
            for (const auto& [i, v] : t.by.entries()) {
              if (!r.is_fixed(i)) rest.set(r(i), v);
            }
            Renumber inner{moved};
            return translate(substitute_node(t.of, inner), std::move(rest));
          },
          [&](const Clamp& c) { return clamp(substitute_node(c.of, r), c.bound); },
      },
      f.node().v);
}

}  // namespace

Function substitute(const Function& f, const std::map<Index, Rational>& fixed) {
  return substitute_node(f, Renumber{fixed});
}

// ------------------------------------------------------------------ printing

std::string Function::str() const {
  auto join = [](const std::vector<Function>& xs, const char* op) {
    std::string s = "(";
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) s += op;
      s += xs[i].str();
    }
    return s + ")";
  };
  return std::visit(
      overloaded{
          [](const Constant& c) { return c.real ? std::to_string(*c.real) : c.exact.get_str(); },
          [](const Coord& c) { return "x" + std::to_string(c.index); },
          [&](const Sum& s) { return join(s.terms, " + "); },
          [&](const Product& p) { return join(p.factors, " * "); },
          [](const Scale& s) { return s.by.get_str() + "*" + s.of.str(); },
          [](const UnaryPiecewise& u) { return "pw" + std::to_string(u.coord) + "[" + u.fn.str() + "]"; },
          [](const Indicator& ind) { return "1" + ind.set.str(); },
          [](const IndexProduct& p) {
            return "prod_{" + std::to_string(p.first) + ".." + std::to_string(p.last) + "}[" + p.fn.str() + "]";
          },
          [](const Series& s) {
            return "series_{n>=" + std::to_string(s.first) + "}[below " + s.below.str() + "; at " + s.at.str() +
                   "; above " + s.above.str() + "]";
          },
          [](const Translate& t) { return t.of.str() + "(x + " + linf::str(t.by) + ")"; },
          [](const Clamp& c) { return "clamp_" + c.bound.str() + "(" + c.of.str() + ")"; },
      },
      node_->v);
}

// ------------------------------------------------------------ sup bounds

namespace {

using Bound = std::optional<Rational>;

Rational magnitude(const Rational& a, const Rational& b) { return std::max(abs(a), abs(b)); }

// sup |p| over the part of `range` covered by p's pieces.
Bound piecewise_bound(const Piecewise& p, const IntervalSet& range) {
  Rational out = 0;
  for (const auto& r : range.intervals()) {
    for (const auto& pc : p.pieces()) {
      Interval d = intersect(pc.domain, r);
      if (d.is_empty()) continue;
      if (pc.poly.degree() <= 0) {
        out = std::max(out, pc.poly.is_zero() ? Rational(0) : abs(pc.poly.coeffs()[0]));
        continue;
      }
      if (!d.bounded()) return std::nullopt;
      auto [lo, hi] = pc.poly.enclosure(d.lo(), d.hi());
      out = std::max(out, magnitude(lo, hi));
    }
  }
  return out;
}

Bound bound_of(const Function& f, const Box& region) {
  if (region.is_empty()) return Rational(0);
  return std::visit(
      overloaded{
          [&](const Constant& c) -> Bound { return c.real ? Rational(std::abs(*c.real)) : abs(c.exact); },
          [&](const Coord& c) -> Bound {
            const IntervalSet& r = region.component(c.index);
            if (r.is_empty()) return Rational(0);
            if (!r.bounded()) return std::nullopt;
            Interval h = r.hull();
            return magnitude(h.lo(), h.hi());
          },
          [&](const Sum& s) -> Bound {
            Rational total = 0;
            for (const auto& t : s.terms) {
              Bound b = bound_of(t, region);
              if (!b) return std::nullopt;
              total += *b;
            }
            return total;
          },
          [&](const Product& p) -> Bound {
            Rational total = 1;
            bool unknown = false;
            for (const auto& t : p.factors) {
              Bound b = bound_of(t, region);
              if (b && sgn(*b) == 0) return Rational(0);
              if (!b) unknown = true;
              else total *= *b;
            }
            return unknown ? Bound{} : Bound{total};
          },
          [&](const Scale& s) -> Bound {
            Bound b = bound_of(s.of, region);
            return b ? Bound{abs(s.by) * *b} : Bound{};
          },
          [&](const UnaryPiecewise& u) -> Bound { return piecewise_bound(u.fn, region.component(u.coord)); },
          [&](const Indicator&) -> Bound { return Rational(1); },
          [&](const IndexProduct& p) -> Bound {
            Rational total = 1;
            for (Index i = p.first; i <= p.last; ++i) {
              Bound b = piecewise_bound(p.fn, region.component(i));
              if (!b) return std::nullopt;
              total *= *b;
            }
            return total;
          },
          [&](const Series&) -> Bound { return std::nullopt; },
          [&](const Translate& t) -> Bound { return bound_of(t.of, translate(region, t.by)); },
          [&](const Clamp& c) -> Bound {
            Bound b = bound_of(c.of, region);
            if (c.bound.is_infinite()) return b;
            Rational cap = c.bound.value();
            return b ? std::min(*b, cap) : cap;
          },
      },
      f.node().v);
}

}  // namespace

std::optional<Rational> sup_bound(const Function& f, const Box& region) { return bound_of(f, region); }

}  // namespace linf
