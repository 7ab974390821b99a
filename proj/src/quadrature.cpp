#include "linf/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <queue>
#include <random>
#include <set>
#include <sstream>

#include "linf/error.hpp"

namespace linf {

std::string to_string(QuadMode m) {
  switch (m) {
    case QuadMode::Auto: return "auto";
    case QuadMode::Exact: return "exact";
    case QuadMode::TensorGauss: return "tensor-gauss";
    case QuadMode::Adaptive: return "adaptive";
    case QuadMode::Qmc: return "qmc";
  }
  return "?";
}

QuadMode parse_quad_mode(const std::string& s) {
  for (QuadMode m : {QuadMode::Auto, QuadMode::Exact, QuadMode::TensorGauss, QuadMode::Adaptive, QuadMode::Qmc}) {
    if (to_string(m) == s) return m;
  }
  throw Error(ErrorKind::Parse, "unknown quadrature mode '" + s + "'");
}

// ------------------------------------------------------------- product form

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

using Terms = std::vector<ProductTerm>;

std::optional<Terms> expand(const Function& f, std::size_t max_terms) {
  return std::visit(
      overloaded{
          [&](const Constant& c) -> std::optional<Terms> {
            if (c.real) return std::nullopt;
            if (sgn(c.exact) == 0) return Terms{};
            return Terms{{c.exact, {}}};
          },
          [&](const UnaryPiecewise& u) -> std::optional<Terms> { return Terms{{1, {{u.coord, u.fn}}}}; },
          [&](const Scale& s) -> std::optional<Terms> {
            auto inner = expand(s.of, max_terms);
            if (inner) {
              for (auto& t : *inner) t.coef *= s.by;
            }
            return inner;
          },
          [&](const Sum& s) -> std::optional<Terms> {
            Terms out;
            for (const auto& g : s.terms) {
              auto part = expand(g, max_terms);
              if (!part) return std::nullopt;
              out.insert(out.end(), part->begin(), part->end());
              if (out.size() > max_terms) return std::nullopt;
            }
            return out;
          },
          [&](const Product& p) -> std::optional<Terms> {
            Terms acc{{1, {}}};
            for (const auto& g : p.factors) {
              auto part = expand(g, max_terms);
              if (!part) return std::nullopt;
              if (acc.size() * part->size() > max_terms) return std::nullopt;
              if (part->size() == 1) {
                // Common case (a single factor): merge in place.
                const ProductTerm& b = part->front();
                std::erase_if(acc, [&](ProductTerm& a) {
                  a.coef *= b.coef;
                  for (const auto& [i, fn] : b.factors) {
                    auto [it, fresh] = a.factors.emplace(i, fn);
                    if (!fresh) it->second = it->second * fn;
                    if (it->second.is_zero()) return true;
                  }
                  return false;
                });
                continue;
              }
              Terms next;
              for (const auto& a : acc) {
                for (const auto& b : *part) {
                  ProductTerm t{a.coef * b.coef, a.factors};
                  bool zero = false;
                  for (const auto& [i, fn] : b.factors) {
                    auto [it, fresh] = t.factors.emplace(i, fn);
                    if (!fresh) it->second = it->second * fn;
                    zero = zero || it->second.is_zero();
                  }
                  if (!zero) next.push_back(std::move(t));
                }
              }
              acc = std::move(next);
            }
            return acc;
          },
          [&](const auto&) -> std::optional<Terms> { return std::nullopt; },
      },
      f.node().v);
}

const IntervalSet kUnit = IntervalSet::unit();
const Interval kUnitInterval = Interval::closed(0, 1);

}  // namespace

std::optional<ProductForm> product_form(const Function& body, std::size_t max_terms) {
  auto terms = expand(body, max_terms);
  if (!terms) return std::nullopt;
  ProductForm out;
  for (auto& t : *terms) {
    if (sgn(t.coef) == 0) continue;
    bool zero = false;
    for (auto it = t.factors.begin(); it != t.factors.end();) {
      it->second = it->second.restricted(kUnit);
      if (it->second.is_zero()) zero = true;
      if (it->second.is_one_on_unit()) {
        it = t.factors.erase(it);
      } else {
        ++it;
      }
    }
    if (!zero) out.terms.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------- exact distribution (DP)

namespace {

constexpr std::size_t kMaxStates = 1 << 17;

struct AtomGroup {
  std::vector<Rational> values;  // factor value per term on this group
  std::vector<std::uint64_t> mask;  // bits of terms with value 1 (0/1 forms)
  Rational length;
};

struct CoordAtoms {
  Index coord;
  std::vector<AtomGroup> groups;
};

// Splits [0,1] on each used coordinate into intervals where every factor is
// constant and merges intervals that give the same values.
std::vector<CoordAtoms> atomize(const ProductForm& f, bool& zero_one) {
  std::map<Index, std::vector<std::size_t>> users;
  for (std::size_t t = 0; t < f.terms.size(); ++t) {
    for (const auto& [i, fn] : f.terms[t].factors) users[i].push_back(t);
  }
  const std::size_t words = (f.terms.size() + 63) / 64;
  zero_one = true;
  std::vector<CoordAtoms> out;
  for (const auto& [i, ts] : users) {
    std::vector<Rational> cuts = {0, 1};
    for (std::size_t t : ts) {
      auto b = f.terms[t].factors.at(i).breakpoints(0, 1);
      cuts.insert(cuts.end(), b.begin(), b.end());
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::map<std::vector<Rational>, Rational> grouped;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      Rational mid = (cuts[k] + cuts[k + 1]) / 2;
      std::vector<Rational> values(f.terms.size(), Rational(1));
      for (std::size_t t : ts) values[t] = f.terms[t].factors.at(i)(mid);
      grouped[values] += cuts[k + 1] - cuts[k];
    }
    CoordAtoms ca{i, {}};
    for (auto& [values, len] : grouped) {
      AtomGroup g{values, std::vector<std::uint64_t>(words, 0), len};
      for (std::size_t t = 0; t < values.size(); ++t) {
        if (values[t] == 1) {
          g.mask[t / 64] |= std::uint64_t{1} << (t % 64);
        } else if (sgn(values[t]) != 0) {
          zero_one = false;
        }
      }
      ca.groups.push_back(std::move(g));
    }
    out.push_back(std::move(ca));
  }
  return out;
}

template <class State, class Combine, class Dead, class Value>
std::optional<std::map<Rational, Rational>> run_dp(const std::vector<CoordAtoms>& coords, State init,
                                                   Combine combine, Dead dead, Value value) {
  std::map<State, Rational> states{{std::move(init), Rational(1)}};
  Rational dead_weight = 0;
  for (const auto& ca : coords) {
    std::map<State, Rational> next;
    for (const auto& [s, w] : states) {
      for (const auto& g : ca.groups) {
        State t = combine(s, g);
        if (dead(t)) {
          dead_weight += w * g.length;
        } else {
          next[std::move(t)] += w * g.length;
        }
      }
    }
    if (next.size() > kMaxStates) return std::nullopt;
    states = std::move(next);
  }
  std::map<Rational, Rational> dist;
  if (sgn(dead_weight) != 0) dist[0] += dead_weight;
  for (const auto& [s, w] : states) dist[value(s)] += w;
  std::erase_if(dist, [](const auto& kv) { return sgn(kv.second) == 0; });
  return dist;
}

std::optional<std::map<Rational, Rational>> value_distribution(const ProductForm& f) {
  bool zero_one = false;
  auto coords = atomize(f, zero_one);
  const std::size_t terms = f.terms.size();
  if (zero_one) {
    const std::size_t words = (terms + 63) / 64;
    std::vector<std::uint64_t> all(words, ~std::uint64_t{0});
    if (terms % 64) all.back() = (std::uint64_t{1} << (terms % 64)) - 1;
    return run_dp(
        coords, all,
        [](const std::vector<std::uint64_t>& s, const AtomGroup& g) {
          std::vector<std::uint64_t> t(s.size());
          for (std::size_t w = 0; w < s.size(); ++w) t[w] = s[w] & g.mask[w];
          return t;
        },
        [](const std::vector<std::uint64_t>& s) {
          return std::all_of(s.begin(), s.end(), [](std::uint64_t w) { return w == 0; });
        },
        [&](const std::vector<std::uint64_t>& s) {
          Rational v = 0;
          for (std::size_t t = 0; t < terms; ++t) {
            if (s[t / 64] >> (t % 64) & 1) v += f.terms[t].coef;
          }
          return v;
        });
  }
  return run_dp(
      coords, std::vector<Rational>(terms, Rational(1)),
      [](const std::vector<Rational>& s, const AtomGroup& g) {
        std::vector<Rational> t(s.size());
        for (std::size_t k = 0; k < s.size(); ++k) t[k] = s[k] * g.values[k];
        return t;
      },
      [](const std::vector<Rational>& s) {
        return std::all_of(s.begin(), s.end(), [](const Rational& v) { return sgn(v) == 0; });
      },
      [&](const std::vector<Rational>& s) {
        Rational v = 0;
        for (std::size_t t = 0; t < terms; ++t) v += f.terms[t].coef * s[t];
        return v;
      });
}

using Range = std::pair<Rational, Rational>;

Range mul(const Range& a, const Range& b) {
  std::array<Rational, 4> c = {a.first * b.first, a.first * b.second, a.second * b.first, a.second * b.second};
  return {*std::min_element(c.begin(), c.end()), *std::max_element(c.begin(), c.end())};
}

// Rigorous enclosure of the form's values on the unit cube.
Range enclosure(const ProductForm& f) {
  Range total{0, 0};
  for (const auto& t : f.terms) {
    Range r{t.coef, t.coef};
    for (const auto& [i, fn] : t.factors) r = mul(r, fn.enclosure(0, 1));
    total = {total.first + r.first, total.second + r.second};
  }
  return total;
}

Rational untruncated(const ProductForm& f) {
  Rational total = 0;
  for (const auto& t : f.terms) {
    Rational v = t.coef;
    for (const auto& [i, fn] : t.factors) {
      v *= fn.integral(kUnitInterval);
      if (sgn(v) == 0) break;
    }
    total += v;
  }
  return total;
}

}  // namespace

// ------------------------------------------------------------- prepared slice

PreparedSlice::PreparedSlice(SlicedFunction g, std::shared_ptr<NumericMemo> memo)
    : g_(std::move(g)), form_(product_form(g_.body)), memo_(std::move(memo)) {
  if (form_) {
    piecewise_constant_ = std::all_of(form_->terms.begin(), form_->terms.end(), [](const ProductTerm& t) {
      return std::all_of(t.factors.begin(), t.factors.end(),
                         [](const auto& kv) { return kv.second.is_piecewise_constant(); });
    });
    if (!piecewise_constant_) {
      Range r = enclosure(*form_);
      bound_ = std::max(abs(r.first), abs(r.second));
    }
  }
}

const std::string& PreparedSlice::fingerprint() const {
  if (fingerprint_.empty()) {
    std::ostringstream os;
    for (Index i : g_.active()) os << i << ",";
    os << "|";
    if (form_) {
      for (const auto& t : form_->terms) {
        os << t.coef.get_str() << "*";
        for (const auto& [i, fn] : t.factors) os << i << ":" << fn.str() << "*";
        os << "+";
      }
    } else {
      os << g_.body.str();
    }
    fingerprint_ = os.str();
  }
  return fingerprint_;
}

const std::map<Rational, Rational>* PreparedSlice::distribution() const {
  if (!dist_ && !dist_failed_) {
    dist_ = value_distribution(*form_);
    dist_failed_ = !dist_;
  }
  return dist_ ? &*dist_ : nullptr;
}

std::optional<SliceIntegral> PreparedSlice::exact_integral(const QuadratureSpec& spec) const {
  if (!form_) return std::nullopt;
  SliceIntegral out;
  out.n = g_.dims == 0 ? 0 : g_.dims - 1;
  out.truncation = spec.truncation;
  out.mode = QuadMode::Exact;
  const bool truncated = !spec.truncation.is_infinite();
  if (!truncated && !spec.absolute) {
    out.exact = untruncated(*form_);
    out.exceedance_exact = Rational(0);
  } else if (piecewise_constant_) {
    const auto* dist = distribution();
    if (!dist) return std::nullopt;
    Rational value = 0, dropped = 0;
    for (const auto& [v, w] : *dist) {
      if (truncated && Extended(abs(v)) > spec.truncation) {
        dropped += w;
      } else {
        value += (spec.absolute ? abs(v) : v) * w;
      }
    }
    out.exact = value;
    out.exceedance_exact = dropped;
  } else {
    // Polynomial pieces: exact only when truncation provably never fires and
    // the sign is fixed for |g|.
    Range r = enclosure(*form_);
    Rational bound = std::max(abs(r.first), abs(r.second));
    if (truncated && Extended(bound) > spec.truncation) return std::nullopt;
    Rational v = untruncated(*form_);
    if (spec.absolute) {
      if (sgn(r.first) >= 0) {
      } else if (sgn(r.second) <= 0) {
        v = -v;
      } else {
        return std::nullopt;
      }
    }
    out.exact = v;
    out.exceedance_exact = Rational(0);
  }
  out.value = out.exact->get_d();
  out.exceedance = out.exceedance_exact->get_d();
  return out;
}

// ------------------------------------------------------------ numeric rules

const GaussRule& gauss_rule(int order) {
  static const std::vector<GaussRule> rules = [] {
    // Newton iteration on P_n from the usual cosine guesses.
    std::vector<GaussRule> out(65);
    for (int n = 1; n <= 64; ++n) {
      auto legendre = [n](double x) {
        double p0 = 1, p1 = x;
        for (int j = 2; j <= n; ++j) {
          double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
          p0 = p1;
          p1 = p2;
        }
        return std::pair{p1, n * (x * p1 - p0) / (x * x - 1)};
      };
      GaussRule r;
      for (int k = 1; k <= n; ++k) {
        double x = std::cos(std::numbers::pi * (k - 0.25) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
          auto [p, dp] = legendre(x);
          double dx = p / dp;
          x -= dx;
          if (std::abs(dx) < 1e-16) break;
        }
        double dp = legendre(x).second;
        r.nodes.push_back((1 - x) / 2);
        r.weights.push_back(1 / ((1 - x * x) * dp * dp));
      }
      out[n] = std::move(r);
    }
    return out;
  }();
  if (order < 1 || order > 64) throw Error(ErrorKind::Domain, "Gauss order must lie in 1..64");
  return rules[order];
}

namespace {

struct Pair {
  double value = 0, dropped = 0;
  Pair& operator+=(const Pair& o) {
    value += o.value;
    dropped += o.dropped;
    return *this;
  }
};

// Integrand on the active coordinates, mapped into the full slice vector.
class Integrand {
 public:
  Integrand(const SlicedFunction& g, const std::optional<ProductForm>& form, const QuadratureSpec& spec)
      : g_(g), active_(g.active()), full_(g.dims, 0.5), spec_(spec) {
    if (form) {
      for (const auto& t : form->terms) {
        terms_.push_back({t.coef.get_d(), {}});
        for (const auto& [i, fn] : t.factors) terms_.back().second.emplace_back(i, &fn);
      }
      use_form_ = true;
    }
    limit_ = spec.truncation.is_infinite() ? INFINITY : spec.truncation.to_double();
  }

  std::size_t dims() const { return active_.size(); }
  const std::vector<Index>& active() const { return active_; }

  Pair operator()(const double* y) {
    ++evaluations;
    for (std::size_t k = 0; k < active_.size(); ++k) full_[active_[k]] = y[k];
    double v = 0;
    if (use_form_) {
      for (const auto& [c, fs] : terms_) {
        double p = c;
        for (const auto& [i, fn] : fs) p *= (*fn)(full_[i]);
        v += p;
      }
    } else {
      v = g_(full_);
    }
    if (std::abs(v) > limit_) return {0, 1};
    return {spec_.absolute ? std::abs(v) : v, 0};
  }

  std::size_t evaluations = 0;

 private:
  const SlicedFunction& g_;
  std::vector<Index> active_;
  std::vector<double> full_;
  const QuadratureSpec& spec_;
  bool use_form_ = false;
  std::vector<std::pair<double, std::vector<std::pair<Index, const Piecewise*>>>> terms_;
  double limit_ = INFINITY;
};

Pair tensor_gauss(Integrand& h, const std::vector<double>& lo, const std::vector<double>& hi, int order) {
  const GaussRule& r = gauss_rule(order);
  const std::size_t d = lo.size();
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> y(d);
  double volume = 1;
  for (std::size_t k = 0; k < d; ++k) volume *= hi[k] - lo[k];
  Pair total;
  while (true) {
    double w = volume;
    for (std::size_t k = 0; k < d; ++k) {
      y[k] = lo[k] + (hi[k] - lo[k]) * r.nodes[idx[k]];
      w *= r.weights[idx[k]];
    }
    Pair p = h(y.data());
    total.value += w * p.value;
    total.dropped += w * p.dropped;
    std::size_t k = 0;
    while (k < d && ++idx[k] == r.nodes.size()) idx[k++] = 0;
    if (k == d) break;
  }
  return total;
}

std::size_t ipow(std::size_t b, std::size_t e) {
  std::size_t r = 1;
  for (std::size_t k = 0; k < e; ++k) {
    if (r > (std::size_t{1} << 62) / b) return SIZE_MAX;
    r *= b;
  }
  return r;
}

struct Region {
  std::vector<double> lo, hi;
  Pair value;
  double error = 0;
  bool operator<(const Region& o) const { return error < o.error; }
};

void collect_cuts(const Function& f, std::map<Index, std::set<Rational>>& out) {
  std::visit(overloaded{
                 [&](const UnaryPiecewise& u) {
                   for (const auto& b : u.fn.breakpoints(0, 1)) out[u.coord].insert(b);
                 },
                 [&](const Sum& s) {
                   for (const auto& g : s.terms) collect_cuts(g, out);
                 },
                 [&](const Product& p) {
                   for (const auto& g : p.factors) collect_cuts(g, out);
                 },
                 [&](const Scale& s) { collect_cuts(s.of, out); },
                 [&](const Clamp& c) { collect_cuts(c.of, out); },
                 [&](const auto&) {},
             },
             f.node().v);
}

// Starts from the grid of piece breakpoints when it is small enough, so that
// every starting region sees smooth pieces only.
SliceIntegral adaptive(Integrand& h, const QuadratureSpec& spec, const Function& body) {
  const std::size_t d = h.dims();
  const int fine = std::max(spec.order, 2), coarse = fine - 1;
  const std::size_t per_region = ipow(fine, d) + ipow(coarse, d);
  if (per_region > spec.budget) {
    throw Error(ErrorKind::BudgetExceeded, "adaptive rule needs " + std::to_string(per_region) + " evaluations per region");
  }
  auto evaluate = [&](std::vector<double> lo, std::vector<double> hi) {
    Region r{std::move(lo), std::move(hi), {}, 0};
    r.value = tensor_gauss(h, r.lo, r.hi, fine);
    Pair c = tensor_gauss(h, r.lo, r.hi, coarse);
    r.error = std::abs(r.value.value - c.value) + std::abs(r.value.dropped - c.dropped);
    return r;
  };
  std::priority_queue<Region> queue;
  std::map<Index, std::set<Rational>> cuts;
  collect_cuts(body, cuts);
  std::vector<std::vector<double>> axes;
  std::size_t regions = 1;
  for (Index i : h.active()) {
    std::vector<double> axis = {0};
    for (const auto& c : cuts[i]) axis.push_back(c.get_d());
    axis.push_back(1);
    regions *= axis.size() - 1;
    axes.push_back(std::move(axis));
  }
  if (regions > 4096 || regions * per_region * 4 > spec.budget) {
    axes.assign(d, std::vector<double>{0, 1});
  }
  std::vector<std::size_t> pick(d, 0);
  double total_error = 0;
  while (true) {
    std::vector<double> lo(d), hi(d);
    for (std::size_t k = 0; k < d; ++k) {
      lo[k] = axes[k][pick[k]];
      hi[k] = axes[k][pick[k] + 1];
    }
    Region r = evaluate(lo, hi);
    total_error += r.error;
    queue.push(std::move(r));
    std::size_t k = 0;
    while (k < d && ++pick[k] == axes[k].size() - 1) pick[k++] = 0;
    if (k == d) break;
  }

  while (total_error > spec.tolerance && h.evaluations + 2 * per_region <= spec.budget) {
    Region r = queue.top();
    queue.pop();
    std::size_t axis = 0;
    for (std::size_t k = 1; k < d; ++k) {
      if (r.hi[k] - r.lo[k] > r.hi[axis] - r.lo[axis]) axis = k;
    }
    double mid = (r.lo[axis] + r.hi[axis]) / 2;
    std::vector<double> left_hi = r.hi, right_lo = r.lo;
    left_hi[axis] = mid;
    right_lo[axis] = mid;
    Region a = evaluate(r.lo, left_hi), b = evaluate(right_lo, r.hi);
    total_error += a.error + b.error - r.error;
    queue.push(std::move(a));
    queue.push(std::move(b));
  }
  // Sum in a fixed order (by region bounds) so the result does not depend on
  // heap layout.
  std::vector<Region> all;
  while (!queue.empty()) {
    all.push_back(queue.top());
    queue.pop();
  }
  std::sort(all.begin(), all.end(), [](const Region& a, const Region& b) { return a.lo < b.lo; });
  SliceIntegral out;
  double err = 0;
  for (const auto& r : all) {
    out.value += r.value.value;
    out.exceedance += r.value.dropped;
    err += r.error;
  }
  out.error = err;
  out.mode = QuadMode::Adaptive;
  return out;
}

double radical_inverse(std::uint64_t k, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0;
  while (k > 0) {
    r += f * static_cast<double>(k % base);
    k /= base;
    f *= inv;
  }
  return r;
}

std::vector<unsigned> first_primes(std::size_t count) {
  std::vector<unsigned> out;
  for (unsigned c = 2; out.size() < count; ++c) {
    bool prime = true;
    for (unsigned p : out) {
      if (p * p > c) break;
      if (c % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) out.push_back(c);
  }
  return out;
}

// Two-sided 99.9% Student t quantile.
double student_999(std::size_t dof) {
  static constexpr std::array<double, 31> table = {0,     636.6, 31.6, 12.92, 8.61, 6.87, 5.96, 5.41, 5.04, 4.78, 4.59,
                                                   4.44,  4.32,  4.22, 4.14,  4.07, 4.01, 3.97, 3.92, 3.88, 3.85, 3.82,
                                                   3.79,  3.77,  3.75, 3.73,  3.71, 3.69, 3.67, 3.66, 3.65};
  return dof < table.size() ? table[dof] : 3.29;
}

// Halton points with independent Cranley-Patterson shifts per replicate. The
// error is a 99.9% confidence half-width over the replicate means.
SliceIntegral qmc(Integrand& h, const QuadratureSpec& spec) {
  const std::size_t d = h.dims();
  const int reps = std::max(spec.qmc_replicates, 2);
  if (static_cast<std::size_t>(reps) * spec.qmc_points > spec.budget) {
    throw Error(ErrorKind::BudgetExceeded, "QMC needs more evaluations than the budget allows");
  }
  auto primes = first_primes(d);
  std::mt19937_64 rng(spec.qmc_seed);
  std::uniform_real_distribution<double> unif(0, 1);
  std::vector<double> means, drops;
  std::vector<double> y(d), shift(d);
  for (int r = 0; r < reps; ++r) {
    for (auto& s : shift) s = unif(rng);
    Pair sum;
    for (std::size_t k = 1; k <= spec.qmc_points; ++k) {
      for (std::size_t j = 0; j < d; ++j) {
        double v = radical_inverse(k, primes[j]) + shift[j];
        y[j] = v >= 1 ? v - 1 : v;
      }
      sum += h(y.data());
    }
    means.push_back(sum.value / spec.qmc_points);
    drops.push_back(sum.dropped / spec.qmc_points);
  }
  auto mean_and_error = [&](const std::vector<double>& xs) {
    double m = 0;
    for (double x : xs) m += x;
    m /= xs.size();
    double var = 0;
    for (double x : xs) var += (x - m) * (x - m);
    var /= (xs.size() - 1);
    return std::pair{m, student_999(xs.size() - 1) * std::sqrt(var / xs.size())};
  };
  SliceIntegral out;
  auto [m, e] = mean_and_error(means);
  auto [dm, de] = mean_and_error(drops);
  out.value = m;
  out.error = e + de;
  out.exceedance = dm;
  out.mode = QuadMode::Qmc;
  return out;
}

}  // namespace

SliceIntegral PreparedSlice::numeric_integral(const QuadratureSpec& spec, QuadMode mode) const {
  if (!memo_) return numeric_uncached(spec, mode);
  std::ostringstream key;
  key << fingerprint() << "#" << to_string(mode) << "," << spec.truncation.str() << "," << spec.absolute << ","
      << spec.order << "," << spec.budget << "," << spec.tolerance << "," << spec.qmc_seed << ","
      << spec.qmc_replicates << "," << spec.qmc_points;
  auto it = memo_->find(key.str());
  if (it == memo_->end()) it = memo_->emplace(key.str(), numeric_uncached(spec, mode)).first;
  SliceIntegral out = it->second;
  out.n = g_.dims == 0 ? 0 : g_.dims - 1;
  return out;
}

SliceIntegral PreparedSlice::numeric_uncached(const QuadratureSpec& spec, QuadMode mode) const {
  if (spec.tolerance <= 0) throw Error(ErrorKind::Domain, "numeric tolerance must be positive");
  Integrand h(g_, form_, spec);
  SliceIntegral out;
  const std::size_t d = h.dims();
  if (d == 0) {
    Pair p = h(nullptr);
    out.value = p.value;
    out.exceedance = p.dropped;
    out.mode = mode;
  } else if (mode == QuadMode::TensorGauss) {
    std::size_t need = ipow(spec.order, d) + ipow(spec.order - 1, d);
    if (spec.order < 2 || need > spec.budget) {
      throw Error(ErrorKind::BudgetExceeded, "tensor Gauss rule of order " + std::to_string(spec.order) + " in " +
                                                 std::to_string(d) + " dimensions exceeds the budget");
    }
    std::vector<double> lo(d, 0), hi(d, 1);
    Pair fine = tensor_gauss(h, lo, hi, spec.order);
    Pair coarse = tensor_gauss(h, lo, hi, spec.order - 1);
    out.value = fine.value;
    out.exceedance = fine.dropped;
    out.error = std::abs(fine.value - coarse.value);
    out.mode = mode;
  } else if (mode == QuadMode::Adaptive) {
    out = adaptive(h, spec, g_.body);
  } else {
    out = qmc(h, spec);
  }
  out.n = g_.dims == 0 ? 0 : g_.dims - 1;
  out.truncation = spec.truncation;
  out.evaluations = h.evaluations;
  return out;
}

namespace {

// Bisects until Gauss rules of orders 10 and 9 agree on |p|.
void abs_piece(const Polynomial& p, double a, double b, double tol, int depth, double& value, double& error) {
  auto rule = [&](int order) {
    const GaussRule& g = gauss_rule(order);
    double s = 0;
    for (int j = 0; j < order; ++j) s += g.weights[j] * std::abs(p(a + (b - a) * g.nodes[j]));
    return s * (b - a);
  };
  double fine = rule(10), diff = std::abs(fine - rule(9));
  if (diff <= tol || depth >= 50) {
    value += fine;
    error += diff;
    return;
  }
  double mid = (a + b) / 2;
  abs_piece(p, a, mid, tol / 2, depth + 1, value, error);
  abs_piece(p, mid, b, tol / 2, depth + 1, value, error);
}

// Integral of |fn| over [0,1] and its error estimate.
std::pair<double, double> abs_integral(const Piecewise& fn, double tol) {
  double value = 0, error = 0;
  for (const auto& pc : fn.pieces()) {
    Interval d = intersect(pc.domain, kUnitInterval);
    if (d.is_empty() || d.lo() == d.hi()) continue;
    abs_piece(pc.poly, d.lo().get_d(), d.hi().get_d(), tol, 0, value, error);
  }
  return {value, error};
}

}  // namespace

std::optional<SliceIntegral> PreparedSlice::separable_absolute(const QuadratureSpec& spec) const {
  if (!form_ || form_->terms.size() != 1 || !spec.absolute || !spec.truncation.is_infinite()) return std::nullopt;
  const ProductTerm& t = form_->terms.front();
  SliceIntegral out;
  out.value = std::abs(t.coef.get_d());
  std::vector<std::pair<double, double>> parts;  // (integral, error) per factor
  for (const auto& [i, fn] : t.factors) parts.push_back(abs_integral(fn, spec.tolerance));
  double err = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    double others = out.value;
    for (std::size_t j = 0; j < parts.size(); ++j) {
      if (j != k) others *= parts[j].first;
    }
    err += parts[k].second * others;
  }
  for (const auto& p : parts) out.value *= p.first;
  out.error = err;
  out.n = g_.dims == 0 ? 0 : g_.dims - 1;
  out.mode = QuadMode::Adaptive;
  return out;
}

SliceIntegral PreparedSlice::integrate(const QuadratureSpec& spec_in) const {
  // Truncation at or above sup |g| never fires.
  QuadratureSpec spec = spec_in;
  if (bound_ && Extended(*bound_) <= spec.truncation) spec.truncation = Extended::infinity();
  SliceIntegral out = dispatch(spec);
  out.truncation = spec_in.truncation;
  return out;
}

SliceIntegral PreparedSlice::dispatch(const QuadratureSpec& spec) const {
  switch (spec.mode) {
    case QuadMode::Exact: {
      auto r = exact_integral(spec);
      if (!r) {
        throw Error(ErrorKind::FormNotExact, "slice has no exact rule under this truncation: " + g_.body.str());
      }
      return *r;
    }
    case QuadMode::Auto: {
      if (auto r = exact_integral(spec)) return *r;
      if (auto r = separable_absolute(spec)) return *r;
      // A truncation cut, |g| or a clamp leaves jumps or kinks along curved
      // surfaces; adaptive cubature cannot reach its tolerance there in 2+ dims.
      const std::size_t d = g_.active().size();
      const bool smooth = form_ && spec.truncation.is_infinite() && !spec.absolute;
      return numeric_integral(spec, d <= 1 || (smooth && d <= 3) ? QuadMode::Adaptive : QuadMode::Qmc);
    }
    default: return numeric_integral(spec, spec.mode);
  }
}

SliceIntegral integrate_slice(const SlicedFunction& g, const QuadratureSpec& spec) {
  return PreparedSlice(g).integrate(spec);
}

Rational integrate_indicator(const BoxUnion& u, std::size_t n) {
  std::vector<Box> finite;
  for (const auto& b : u.boxes) {
    std::map<Index, IntervalSet> comps;
    bool empty = b.is_empty();
    for (Index i = 0; i <= n && !empty; ++i) {
      comps[i] = intersect(b.component(i), kUnit);
      empty = comps[i].is_empty();
    }
    if (!empty) finite.emplace_back(std::move(comps), IntervalSet::whole());
  }
  Rational total = 0;
  for (const auto& b : disjointify(BoxUnion(finite)).boxes) {
    Rational v = 1;
    for (Index i = 0; i <= n && sgn(v) != 0; ++i) {
      v *= intersect(b.component(i), kUnit).length().value();
    }
    total += v;
  }
  return total;
}

}  // namespace linf
