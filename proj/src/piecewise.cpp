#include "linf/piecewise.hpp"

#include <algorithm>

#include "linf/error.hpp"

namespace linf {

Polynomial::Polynomial(std::vector<Rational> coeffs) : c_(std::move(coeffs)) {
  while (!c_.empty() && sgn(c_.back()) == 0) c_.pop_back();
  approx_.reserve(c_.size());
  for (const auto& c : c_) approx_.push_back(c.get_d());
}

Rational Polynomial::operator()(const Rational& x) const {
  Rational acc = 0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

double Polynomial::operator()(double x) const {
  double acc = 0;
  for (auto it = approx_.rbegin(); it != approx_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

Polynomial Polynomial::shifted(const Rational& d) const {
  if (c_.size() <= 1 || sgn(d) == 0) return *this;
  // Horner in the shifted variable: p(x + d) = (...(c_n (x+d) + c_{n-1})(x+d) ...).
  std::vector<Rational> out{c_.back()};
  for (auto it = std::next(c_.rbegin()); it != c_.rend(); ++it) {
    std::vector<Rational> next(out.size() + 1, Rational(0));
    for (std::size_t k = 0; k < out.size(); ++k) {
      next[k + 1] += out[k];
      next[k] += out[k] * d;
    }
    next[0] += *it;
    out = std::move(next);
  }
  return Polynomial(std::move(out));
}

Polynomial Polynomial::scaled(const Rational& s) const {
  std::vector<Rational> out = c_;
  for (auto& c : out) c *= s;
  return Polynomial(std::move(out));
}

Rational Polynomial::integral(const Rational& a, const Rational& b) const {
  Rational acc_a = 0, acc_b = 0;
  for (std::size_t k = c_.size(); k-- > 0;) {
    Rational coef = c_[k] / Rational(static_cast<long>(k + 1));
    acc_a = (acc_a + coef) * a;
    acc_b = (acc_b + coef) * b;
  }
  return acc_b - acc_a;
}

std::pair<Rational, Rational> Polynomial::enclosure(const Rational& a, const Rational& b) const {
  if (c_.empty()) return {0, 0};
  Rational lo = c_.back(), hi = c_.back();
  for (auto it = std::next(c_.rbegin()); it != c_.rend(); ++it) {
    Rational p[4] = {lo * a, lo * b, hi * a, hi * b};
    lo = *std::min_element(p, p + 4) + *it;
    hi = *std::max_element(p, p + 4) + *it;
  }
  return {lo, hi};
}

std::string Polynomial::str() const {
  if (c_.empty()) return "0";
  std::string s;
  for (std::size_t k = 0; k < c_.size(); ++k) {
    if (sgn(c_[k]) == 0) continue;
    if (!s.empty()) s += " + ";
    s += c_[k].get_str();
    if (k == 1) s += "*x";
    if (k > 1) s += "*x^" + std::to_string(k);
  }
  return s;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (a.c_.empty() || b.c_.empty()) return {};
  std::vector<Rational> out(a.c_.size() + b.c_.size() - 1, Rational(0));
  for (std::size_t i = 0; i < a.c_.size(); ++i) {
    for (std::size_t j = 0; j < b.c_.size(); ++j) out[i + j] += a.c_[i] * b.c_[j];
  }
  return Polynomial(std::move(out));
}

namespace {

bool adjacent(const Interval& a, const Interval& b) {
  return !a.hi_infinite() && !b.lo_infinite() && a.hi() == b.lo() && (a.hi_closed() != b.lo_closed());
}

}  // namespace

Piecewise::Piecewise(std::vector<Piece> pieces) {
  std::erase_if(pieces, [](const Piece& p) { return p.domain.is_empty() || p.poly.is_zero(); });
  std::sort(pieces.begin(), pieces.end(),
            [](const Piece& a, const Piece& b) { return Interval::lower_less(a.domain, b.domain); });
  for (std::size_t i = 1; i < pieces.size(); ++i) {
    if (!intersect(pieces[i - 1].domain, pieces[i].domain).is_empty()) {
      throw Error(ErrorKind::Domain, "overlapping pieces " + pieces[i - 1].domain.str() + " and " +
                                         pieces[i].domain.str());
    }
  }
  for (auto& p : pieces) {
    if (!pieces_.empty() && pieces_.back().poly == p.poly && adjacent(pieces_.back().domain, p.domain)) {
      IntervalSet merged = unite(IntervalSet(pieces_.back().domain), IntervalSet(p.domain));
      pieces_.back().domain = merged.intervals().front();
    } else {
      pieces_.push_back(std::move(p));
    }
  }
}

Piecewise Piecewise::constant(const Rational& c) {
  return Piecewise({Piece{Interval::whole(), Polynomial::constant(c)}});
}

Piecewise Piecewise::identity() { return Piecewise({Piece{Interval::whole(), Polynomial::identity()}}); }

Piecewise Piecewise::indicator(const IntervalSet& set) {
  std::vector<Piece> pieces;
  for (const auto& i : set.intervals()) pieces.push_back({i, Polynomial::constant(1)});
  return Piecewise(std::move(pieces));
}

Rational Piecewise::operator()(const Rational& x) const {
  for (const auto& p : pieces_) {
    if (p.domain.contains(x)) return p.poly(x);
  }
  return 0;
}

double Piecewise::operator()(double x) const {
  for (const auto& p : pieces_) {
    if (p.domain.contains(x)) return p.poly(x);
  }
  return 0;
}

Piecewise Piecewise::shifted(const Rational& d) const {
  if (sgn(d) == 0) return *this;
  std::vector<Piece> out;
  for (const auto& p : pieces_) out.push_back({p.domain.translated(-d), p.poly.shifted(d)});
  return Piecewise(std::move(out));
}

Piecewise Piecewise::scaled(const Rational& s) const {
  std::vector<Piece> out;
  for (const auto& p : pieces_) out.push_back({p.domain, p.poly.scaled(s)});
  return Piecewise(std::move(out));
}

Piecewise Piecewise::restricted(const IntervalSet& set) const {
  std::vector<Piece> out;
  for (const auto& p : pieces_) {
    for (const auto& i : set.intervals()) {
      Interval d = intersect(p.domain, i);
      if (!d.is_empty()) out.push_back({d, p.poly});
    }
  }
  return Piecewise(std::move(out));
}

Piecewise operator*(const Piecewise& a, const Piecewise& b) {
  std::vector<Piece> out;
  for (const auto& p : a.pieces_) {
    for (const auto& q : b.pieces_) {
      Interval d = intersect(p.domain, q.domain);
      if (!d.is_empty()) out.push_back({d, p.poly * q.poly});
    }
  }
  return Piecewise(std::move(out));
}

bool Piecewise::is_piecewise_constant() const {
  return std::all_of(pieces_.begin(), pieces_.end(), [](const Piece& p) { return p.poly.degree() <= 0; });
}

bool Piecewise::is_indicator() const {
  return std::all_of(pieces_.begin(), pieces_.end(),
                     [](const Piece& p) { return p.poly == Polynomial::constant(1); });
}

bool Piecewise::is_one_on_unit() const {
  for (const auto& p : pieces_) {
    if (p.poly == Polynomial::constant(1) && IntervalSet::unit().subset_of(IntervalSet(p.domain))) {
      return true;
    }
  }
  return false;
}

IntervalSet Piecewise::nonzero_set() const {
  std::vector<Interval> parts;
  for (const auto& p : pieces_) parts.push_back(p.domain);
  return IntervalSet(std::move(parts));
}

std::vector<Rational> Piecewise::breakpoints(const Rational& a, const Rational& b) const {
  std::vector<Rational> out;
  for (const auto& p : pieces_) {
    if (!p.domain.lo_infinite() && p.domain.lo() > a && p.domain.lo() < b) out.push_back(p.domain.lo());
    if (!p.domain.hi_infinite() && p.domain.hi() > a && p.domain.hi() < b) out.push_back(p.domain.hi());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Rational Piecewise::integral(const Interval& over) const {
  if (!over.is_empty() && !over.bounded()) {
    throw Error(ErrorKind::Domain, "integral over unbounded interval " + over.str());
  }
  Rational total = 0;
  for (const auto& p : pieces_) {
    Interval d = intersect(p.domain, over);
    if (!d.is_empty()) total += p.poly.integral(d.lo(), d.hi());
  }
  return total;
}

std::optional<Rational> Piecewise::lebesgue_integral() const {
  Rational total = 0;
  for (const auto& p : pieces_) {
    if (!p.domain.bounded()) return std::nullopt;
    total += p.poly.integral(p.domain.lo(), p.domain.hi());
  }
  return total;
}

std::pair<Rational, Rational> Piecewise::enclosure(const Rational& a, const Rational& b) const {
  Interval range = Interval::closed(a, b);
  std::vector<Interval> covered;
  bool any = false;
  Rational lo = 0, hi = 0;
  for (const auto& p : pieces_) {
    Interval d = intersect(p.domain, range);
    if (d.is_empty()) continue;
    covered.push_back(d);
    auto [l, h] = p.poly.enclosure(d.lo(), d.hi());
    if (!any) {
      lo = l;
      hi = h;
      any = true;
    } else {
      lo = std::min(lo, l);
      hi = std::max(hi, h);
    }
  }
  if (!IntervalSet(range).subset_of(IntervalSet(std::move(covered)))) {
    lo = std::min(lo, Rational(0));
    hi = std::max(hi, Rational(0));
  }
  return {lo, hi};
}

std::string Piecewise::str() const {
  if (pieces_.empty()) return "0";
  std::string s;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    if (i) s += "; ";
    s += pieces_[i].poly.str() + " on " + pieces_[i].domain.str();
  }
  return s;
}

}  // namespace linf
