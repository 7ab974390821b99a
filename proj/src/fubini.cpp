#include "linf/fubini.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <set>
#include <sstream>

#include "linf/error.hpp"

namespace linf {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

constexpr std::size_t kMaxOuterNodes = 4096;
constexpr std::size_t kMaxTerms = 4096;

}  // namespace

// ------------------------------------------------------------------ splits

CoordinateSplit CoordinateSplit::finite(std::vector<Index> v) {
  CoordinateSplit s;
  s.listed = std::move(v);
  s.validate();
  return s;
}

CoordinateSplit CoordinateSplit::modular(Index modulus, Index residue, std::vector<Index> extra) {
  CoordinateSplit s;
  s.listed = std::move(extra);
  s.rule = Rule{modulus, residue};
  s.validate();
  return s;
}

bool CoordinateSplit::in_v(Index i) const {
  if (rule && i % rule->modulus == rule->residue) return true;
  return std::binary_search(listed.begin(), listed.end(), i);
}

Index CoordinateSplit::rank_v(Index i) const {
  Index r = 0;
  if (rule) r = i > rule->residue ? (i - rule->residue - 1) / rule->modulus + 1 : 0;
  for (Index j : listed) {
    if (j >= i) break;
    if (!rule || j % rule->modulus != rule->residue) ++r;
  }
  return r;
}

void CoordinateSplit::validate() {
  std::sort(listed.begin(), listed.end());
  listed.erase(std::unique(listed.begin(), listed.end()), listed.end());
  if (rule && (rule->modulus < 2 || rule->residue >= rule->modulus)) {
    throw Error(ErrorKind::Domain, "split rule needs modulus >= 2 and residue < modulus");
  }
}

std::string CoordinateSplit::str() const {
  std::ostringstream os;
  os << "V={";
  for (std::size_t k = 0; k < listed.size(); ++k) os << (k ? "," : "") << listed[k];
  os << "}";
  if (rule) os << "+{i mod " << rule->modulus << " = " << rule->residue << "}";
  return os.str();
}

// ------------------------------------------------------------- projections

Box project_w(const Box& b, const CoordinateSplit& split) {
  std::map<Index, IntervalSet> comps;
  for (const auto& [i, c] : b.explicit_components()) {
    if (!split.in_v(i)) comps[split.rank_w(i)] = c;
  }
  return Box(std::move(comps), b.tail());
}

Box project_v(const Box& b, const CoordinateSplit& split) {
  if (split.v_finite()) throw Error(ErrorKind::Domain, "project_v needs an infinite V");
  std::map<Index, IntervalSet> comps;
  for (const auto& [i, c] : b.explicit_components()) {
    if (split.in_v(i)) comps[split.rank_v(i)] = c;
  }
  return Box(std::move(comps), b.tail());
}

Extended v_volume(const Box& b, const CoordinateSplit& split) {
  if (!split.v_finite()) throw Error(ErrorKind::Domain, "v_volume needs a finite V");
  Extended vol(1);
  for (Index i : split.listed) vol = vol * b.component(i).length();
  return vol;
}

Extended split_measure(const Box& b, const CoordinateSplit& split) {
  Extended w = measure(project_w(b, split));
  return (split.v_finite() ? v_volume(b, split) : measure(project_v(b, split))) * w;
}

// ------------------------------------------------- breakpoints and degrees

namespace {

void add_endpoints(const Piecewise& p, std::set<Rational>& out) {
  for (const auto& piece : p.pieces()) {
    if (!piece.domain.lo_infinite()) out.insert(piece.domain.lo());
    if (!piece.domain.hi_infinite()) out.insert(piece.domain.hi());
  }
}

void add_endpoints(const IntervalSet& s, std::set<Rational>& out) {
  for (const auto& x : s.endpoints()) out.insert(x);
}

int degree(const Piecewise& p) {
  int d = 0;
  for (const auto& piece : p.pieces()) d = std::max(d, piece.poly.degree());
  return d;
}

// Points where f may switch polynomial pieces along coordinate i, and the
// largest degree in x_i. Returns false for trees with a clamp.
bool shape(const Function& f, Index i, std::set<Rational>& cuts, int& deg) {
  return std::visit(
      overloaded{
          [&](const Constant&) {
            deg = 0;
            return true;
          },
          [&](const Coord& c) {
            deg = c.index == i ? 1 : 0;
            return true;
          },
          [&](const Sum& s) {
            int best = 0;
            for (const auto& g : s.terms) {
              int d = 0;
              if (!shape(g, i, cuts, d)) return false;
              best = std::max(best, d);
            }
            deg = best;
            return true;
          },
          [&](const Product& p) {
            int total = 0;
            for (const auto& g : p.factors) {
              int d = 0;
              if (!shape(g, i, cuts, d)) return false;
              total += d;
            }
            deg = total;
            return true;
          },
          [&](const Scale& s) { return shape(s.of, i, cuts, deg); },
          [&](const UnaryPiecewise& u) {
            deg = 0;
            if (u.coord == i) {
              add_endpoints(u.fn, cuts);
              deg = degree(u.fn);
            }
            return true;
          },
          [&](const Indicator& ind) {
            for (const auto& b : ind.set.boxes) add_endpoints(b.component(i), cuts);
            deg = 0;
            return true;
          },
          [&](const IndexProduct& p) {
            deg = 0;
            if (p.first <= i && i <= p.last) {
              add_endpoints(p.fn, cuts);
              deg = degree(p.fn);
            }
            return true;
          },
          [&](const Series& s) {
            add_endpoints(s.below, cuts);
            add_endpoints(s.at, cuts);
            add_endpoints(s.above, cuts);
            deg = std::max(degree(s.below), degree(s.at));
            return true;
          },
          [&](const Translate& t) {
            std::set<Rational> inner;
            if (!shape(t.of, i, inner, deg)) return false;
            Rational by = t.by.at(i);
            for (const auto& x : inner) cuts.insert(x - by);
            return true;
          },
          [&](const Clamp&) { return false; },
      },
      f.node().v);
}

// Weights of the open Newton-Cotes rule with q nodes (k+1)/(q+1) on [0,1].
const std::vector<Rational>& newton_cotes(int q) {
  static std::map<int, std::vector<Rational>> cache;
  static std::mutex mu;
  std::lock_guard lock(mu);
  auto it = cache.find(q);
  if (it != cache.end()) return it->second;
  // Solve sum_j w_j t_j^k = 1/(k+1), k < q.
  std::vector<std::vector<Rational>> a(q, std::vector<Rational>(q + 1));
  for (int k = 0; k < q; ++k) {
    for (int j = 0; j < q; ++j) a[k][j] = pow(ratio(j + 1, q + 1), k);
    a[k][q] = ratio(1, k + 1);
  }
  for (int c = 0; c < q; ++c) {
    int p = c;
    while (sgn(a[p][c]) == 0) ++p;
    std::swap(a[p], a[c]);
    for (int r = 0; r < q; ++r) {
      if (r == c || sgn(a[r][c]) == 0) continue;
      Rational m = a[r][c] / a[c][c];
      for (int k = c; k <= q; ++k) a[r][k] -= m * a[c][k];
    }
  }
  std::vector<Rational> w(q);
  for (int j = 0; j < q; ++j) w[j] = a[j][q] / a[j][j];
  return cache.emplace(q, std::move(w)).first->second;
}

struct Node1 {
  Rational x;
  Rational w_exact;  // used when the rule is exact
  double w = 0;
};

// Quadrature nodes along one V-coordinate over the hull [lo, hi].
std::vector<Node1> axis_nodes(const std::set<Rational>& cuts, const Rational& lo, const Rational& hi, int q,
                              bool gauss) {
  std::vector<Rational> pts{lo};
  for (const auto& x : cuts) {
    if (lo < x && x < hi) pts.push_back(x);
  }
  pts.push_back(hi);
  std::vector<Node1> out;
  for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
    Rational a = pts[s], len = pts[s + 1] - pts[s];
    if (gauss) {
      const GaussRule& g = gauss_rule(q);
      for (int j = 0; j < q; ++j) {
        Rational t(g.nodes[j]);
        out.push_back({Rational(a + len * t), Rational(0), g.weights[j] * len.get_d()});
      }
    } else {
      const auto& w = newton_cotes(q);
      for (int j = 0; j < q; ++j) {
        Rational wj = w[j] * len;
        out.push_back({Rational(a + len * ratio(j + 1, q + 1)), wj, wj.get_d()});
      }
    }
  }
  return out;
}

struct Outer {
  LimitStatus status = LimitStatus::Converged;
  double value = 0;
  std::optional<Rational> exact = Rational(0);
  std::size_t points = 0;
  std::string reason;
};

// Tensor rule over the V-coordinates; every node runs a full inner integral.
Outer tensor_outer(const Function& f, const std::vector<Index>& v, const std::vector<std::vector<Node1>>& axes,
                   bool exact_rule, const LimitSchedule& sched) {
  Outer out;
  if (!exact_rule) out.exact.reset();
  std::vector<std::size_t> at(v.size(), 0);
  while (true) {
    std::map<Index, Rational> fixed;
    Rational w_exact = 1;
    double w = 1;
    for (std::size_t k = 0; k < v.size(); ++k) {
      const Node1& nd = axes[k][at[k]];
      fixed[v[k]] = nd.x;
      w_exact *= nd.w_exact;
      w *= nd.w;
    }
    IntegralResult inner = integrate_global(substitute(f, fixed), sched);
    ++out.points;
    if (inner.status != LimitStatus::Converged) {
      std::ostringstream os;
      os << "inner integral at x_V = (";
      for (std::size_t k = 0; k < v.size(); ++k) os << (k ? ", " : "") << fixed[v[k]].get_str();
      os << ") is " << to_string(inner.status);
      if (!inner.reason.empty()) os << ": " << inner.reason;
      out.status = inner.status;
      out.reason = os.str();
      out.exact.reset();
      return out;
    }
    out.value += w * inner.value;
    if (out.exact && inner.exact) {
      *out.exact += w_exact * *inner.exact;
    } else {
      out.exact.reset();
    }
    std::size_t k = 0;
    while (k < v.size() && ++at[k] == axes[k].size()) at[k++] = 0;
    if (k == v.size()) break;
  }
  if (out.exact) out.value = out.exact->get_d();
  return out;
}

// ------------------------------------------------------- full product form

struct FTerm {
  Rational coef;
  std::map<Index, Piecewise> factors;
  Piecewise tail;  // applied to every coordinate not in factors
};
using FTerms = std::vector<FTerm>;

const Piecewise& one() {
  static const Piecewise p = Piecewise::constant(1);
  return p;
}

std::optional<FTerms> expand_full(const Function& f) {
  return std::visit(
      overloaded{
          [&](const Constant& c) -> std::optional<FTerms> {
            if (c.real) return std::nullopt;
            if (sgn(c.exact) == 0) return FTerms{};
            return FTerms{{c.exact, {}, one()}};
          },
          [&](const Coord& c) -> std::optional<FTerms> {
            return FTerms{{Rational(1), {{c.index, Piecewise::identity()}}, one()}};
          },
          [&](const Sum& s) -> std::optional<FTerms> {
            FTerms out;
            for (const auto& g : s.terms) {
              auto part = expand_full(g);
              if (!part) return std::nullopt;
              out.insert(out.end(), part->begin(), part->end());
              if (out.size() > kMaxTerms) return std::nullopt;
            }
            return out;
          },
          [&](const Product& p) -> std::optional<FTerms> {
            FTerms acc{{Rational(1), {}, one()}};
            for (const auto& g : p.factors) {
              auto part = expand_full(g);
              if (!part) return std::nullopt;
              if (acc.size() * part->size() > kMaxTerms) return std::nullopt;
              FTerms next;
              for (const auto& a : acc) {
                for (const auto& b : *part) {
                  FTerm t{a.coef * b.coef, {}, a.tail * b.tail};
                  bool zero = t.tail.is_zero();
                  for (const auto& [i, fa] : a.factors) {
                    auto it = b.factors.find(i);
                    t.factors[i] = fa * (it != b.factors.end() ? it->second : b.tail);
                  }
                  for (const auto& [i, fb] : b.factors) {
                    if (!a.factors.count(i)) t.factors[i] = a.tail * fb;
                  }
                  for (const auto& [i, fn] : t.factors) zero = zero || fn.is_zero();
                  if (!zero) next.push_back(std::move(t));
                }
              }
              acc = std::move(next);
            }
            return acc;
          },
          [&](const Scale& s) -> std::optional<FTerms> {
            auto part = expand_full(s.of);
            if (part) {
              for (auto& t : *part) t.coef *= s.by;
            }
            return part;
          },
          [&](const UnaryPiecewise& u) -> std::optional<FTerms> {
            if (u.fn.is_zero()) return FTerms{};
            return FTerms{{Rational(1), {{u.coord, u.fn}}, one()}};
          },
          [&](const Indicator& ind) -> std::optional<FTerms> {
            FTerms out;
            for (const auto& b : disjointify(ind.set).boxes) {
              FTerm t{Rational(1), {}, Piecewise::indicator(b.tail())};
              for (const auto& [i, c] : b.explicit_components()) t.factors[i] = Piecewise::indicator(c);
              out.push_back(std::move(t));
            }
            return out;
          },
          [&](const IndexProduct& p) -> std::optional<FTerms> {
            FTerm t{Rational(1), {}, one()};
            for (Index i = p.first; i <= p.last; ++i) t.factors[i] = p.fn;
            return FTerms{std::move(t)};
          },
          [&](const Series&) -> std::optional<FTerms> { return std::nullopt; },
          [&](const Translate& tr) -> std::optional<FTerms> {
            auto part = expand_full(tr.of);
            if (!part) return std::nullopt;
            for (auto& t : *part) {
              for (const auto& [i, by] : tr.by.entries()) {
                auto it = t.factors.find(i);
                const Piecewise& base = it != t.factors.end() ? it->second : t.tail;
                t.factors[i] = base.shifted(by);
              }
            }
            return part;
          },
          [&](const Clamp&) -> std::optional<FTerms> { return std::nullopt; },
      },
      f.node().v);
}

// One side of a term as a function of the renumbered side coordinates.
Function side_function(const FTerm& t, const CoordinateSplit& split, bool v_side) {
  if (!t.tail.is_indicator()) throw Error(ErrorKind::SplitUnsupported, "tail factor is not an indicator");
  std::vector<Function> factors;
  std::map<Index, IntervalSet> listed;
  for (const auto& [i, fn] : t.factors) {
    if (split.in_v(i) != v_side) continue;
    Index r = v_side ? split.rank_v(i) : split.rank_w(i);
    factors.push_back(piecewise(r, fn));
    listed[r] = IntervalSet::whole();
  }
  IntervalSet tail = t.tail.nonzero_set();
  if (tail != IntervalSet::whole()) factors.push_back(indicator(BoxUnion(Box(std::move(listed), tail))));
  return product(std::move(factors));
}

IntegralResult infinite_split(const Function& f, const CoordinateSplit& split, const LimitSchedule& sched) {
  auto terms = expand_full(f);
  if (!terms) {
    throw Error(ErrorKind::SplitUnsupported,
                "f has no finite product expansion (series, clamp or real constant) for an infinite split");
  }
  // Group terms by their W part so each distinct inner integral runs once.
  std::vector<Function> w_parts;
  std::vector<std::string> w_keys;
  std::vector<std::vector<Function>> v_parts;
  for (const auto& t : *terms) {
    Function w = side_function(t, split, false);
    std::string key = w.str();
    auto it = std::find(w_keys.begin(), w_keys.end(), key);
    std::size_t g = it - w_keys.begin();
    if (it == w_keys.end()) {
      w_keys.push_back(key);
      w_parts.push_back(w);
      v_parts.emplace_back();
    }
    v_parts[g].push_back(scale(t.coef, side_function(t, split, true)));
  }
  std::vector<Function> outer;
  for (std::size_t g = 0; g < w_parts.size(); ++g) {
    IntegralResult inner = integrate_global(w_parts[g], sched);
    if (inner.status != LimitStatus::Converged) {
      throw Error(ErrorKind::SplitUnsupported, "W part " + w_keys[g] + " of a term is " + to_string(inner.status));
    }
    Function v = sum(std::move(v_parts[g]));
    outer.push_back(inner.exact ? scale(*inner.exact, v) : real_constant(inner.value) * v);
  }
  return integrate_global(sum(std::move(outer)), sched);
}

}  // namespace

// --------------------------------------------------------------- iteration

IntegralResult iterated_integrate(const Function& f, const CoordinateSplit& split_in, const LimitSchedule& sched) {
  CoordinateSplit split = split_in;
  split.validate();
  if (split.v_finite() && split.listed.empty()) return integrate_global(f, sched);

  IntegrabilityReport check = integrability_check(f, sched);
  IntegralResult out;
  out.absolute_integral = check.absolute_integral;
  out.absolute_exact = check.absolute_exact;
  out.cells_used = check.cells;
  if (check.status != LimitStatus::Converged) {
    out.status = check.status;
    out.stage = check.stage.empty() ? "integrability" : check.stage;
    out.reason = check.reason;
    return out;
  }

  if (!split.v_finite()) {
    IntegralResult r = infinite_split(f, split, sched);
    out.status = r.status;
    out.value = r.value;
    out.exact = r.exact;
    out.stage = r.status == LimitStatus::Converged ? "" : "outer";
    out.reason = r.reason;
    out.warnings = r.warnings;
    return out;
  }

  const std::vector<Index>& v = split.listed;
  if (check.cells.empty()) {
    out.status = LimitStatus::Converged;
    out.exact = Rational(0);
    return out;
  }
  // Polynomial degree and cut points along each V-coordinate.
  std::vector<std::set<Rational>> cuts(v.size());
  std::vector<int> degs(v.size(), 0);
  bool polynomial = true;
  for (std::size_t k = 0; k < v.size(); ++k) polynomial = polynomial && shape(f, v[k], cuts[k], degs[k]);
  if (!polynomial && v.size() > 2) {
    throw Error(ErrorKind::SplitUnsupported, "f is not piecewise polynomial in x_V and |V| > 2");
  }

  // Outer range: the hull of the cover cells along each V-coordinate.
  auto build = [&](int extra) {
    std::vector<std::vector<Node1>> axes;
    std::size_t total = 1;
    for (std::size_t k = 0; k < v.size(); ++k) {
      Rational lo = 0, hi = 0;
      bool first = true;
      for (const auto& c : check.cells) {
        Interval h = c.as_box().component(v[k]).hull();
        if (first || h.lo() < lo) lo = h.lo();
        if (first || h.hi() > hi) hi = h.hi();
        first = false;
      }
      int q = polynomial ? degs[k] + 1 : extra;
      axes.push_back(axis_nodes(cuts[k], lo, hi, q, !polynomial));
      total *= axes.back().size();
      if (total > kMaxOuterNodes) throw Error(ErrorKind::SplitUnsupported, "outer rule exceeds the node budget");
    }
    return axes;
  };

  Outer o;
  if (polynomial) {
    o = tensor_outer(f, v, build(0), true, sched);
  } else {
    Outer lo = tensor_outer(f, v, build(3), false, sched);
    o = lo.status == LimitStatus::Converged ? tensor_outer(f, v, build(5), false, sched) : lo;
    if (o.status == LimitStatus::Converged && std::abs(o.value - lo.value) > sched.epsilon) {
      o.status = LimitStatus::Inconclusive;
      std::ostringstream os;
      os << "outer Gauss orders 3 and 5 differ by " << std::abs(o.value - lo.value);
      o.reason = os.str();
    }
    out.warnings.push_back("outer integral uses Gauss rules; f is not piecewise polynomial in x_V");
  }
  out.status = o.status;
  out.value = o.value;
  out.exact = o.exact;
  if (o.status != LimitStatus::Converged) out.stage = "inner";
  out.reason = o.reason;
  out.warnings.push_back("slice integrability checked at " + std::to_string(o.points) +
                         " sampled points of V only");
  return out;
}

FubiniReport fubini_check(const Function& f, const std::vector<CoordinateSplit>& splits,
                          const LimitSchedule& sched, std::optional<double> tolerance) {
  const double tol = tolerance.value_or(4 * sched.epsilon);
  FubiniReport rep;
  rep.direct = integrate_global(f, sched);
  rep.pass = true;
  for (const auto& s : splits) {
    SplitComparison c;
    c.split = s;
    try {
      c.iterated = iterated_integrate(f, s, sched);
    } catch (const Error& e) {
      c.note = std::string(to_string(e.kind())) + ": " + e.what();
      rep.splits.push_back(std::move(c));
      rep.pass = false;
      continue;
    }
    bool both_bad = rep.direct.status == LimitStatus::NotIntegrable &&
                    c.iterated.status == LimitStatus::NotIntegrable;
    bool both_ok = rep.direct.status == LimitStatus::Converged && c.iterated.status == LimitStatus::Converged;
    c.verdict_agrees = rep.direct.status == c.iterated.status;
    if (both_ok) {
      c.difference = std::abs(c.iterated.value - rep.direct.value);
      if (c.iterated.exact && rep.direct.exact) c.exact_difference = abs(*c.iterated.exact - *rep.direct.exact);
      c.pass = c.exact_difference ? sgn(*c.exact_difference) == 0 : c.difference <= tol;
    } else {
      c.pass = both_bad;
      if (!c.verdict_agrees) {
        c.note = "direct is " + to_string(rep.direct.status) + ", iterated is " + to_string(c.iterated.status);
      }
    }
    rep.pass = rep.pass && c.pass;
    rep.splits.push_back(std::move(c));
  }
  return rep;
}

}  // namespace linf
