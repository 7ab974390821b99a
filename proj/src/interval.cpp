#include "linf/interval.hpp"

#include <algorithm>
#include <cctype>

#include "linf/error.hpp"

namespace linf {

Interval Interval::make(std::optional<Rational> lo, bool lo_closed,
                        std::optional<Rational> hi, bool hi_closed) {
  Interval out;
  out.lo_inf_ = !lo.has_value();
  out.hi_inf_ = !hi.has_value();
  out.lo_closed_ = lo_closed && !out.lo_inf_;
  out.hi_closed_ = hi_closed && !out.hi_inf_;
  if (lo) out.lo_ = *lo;
  if (hi) out.hi_ = *hi;
  if (!out.lo_inf_ && !out.hi_inf_) {
    if (out.lo_ > out.hi_) return {};
    if (out.lo_ == out.hi_ && !(out.lo_closed_ && out.hi_closed_)) return {};
  }
  if (out.lo_inf_) out.lo_ = 0;
  if (out.hi_inf_) out.hi_ = 0;
  out.empty_ = false;
  return out;
}

Extended Interval::length() const {
  if (empty_) return Extended(0);
  if (lo_inf_ || hi_inf_) return Extended::infinity();
  return Extended(Rational(hi_ - lo_));
}

bool Interval::contains(const Rational& x) const {
  if (empty_) return false;
  if (!lo_inf_ && (x < lo_ || (x == lo_ && !lo_closed_))) return false;
  if (!hi_inf_ && (x > hi_ || (x == hi_ && !hi_closed_))) return false;
  return true;
}

bool Interval::contains(double x) const {
  if (empty_) return false;
  if (!lo_inf_) {
    double l = lo_.get_d();
    if (x < l || (x == l && !lo_closed_)) return false;
  }
  if (!hi_inf_) {
    double h = hi_.get_d();
    if (x > h || (x == h && !hi_closed_)) return false;
  }
  return true;
}

Interval Interval::translated(const Rational& t) const {
  if (empty_) return {};
  Interval out = *this;
  if (!lo_inf_) out.lo_ += t;
  if (!hi_inf_) out.hi_ += t;
  return out;
}

std::string Interval::str() const {
  if (empty_) return "empty";
  if (!lo_inf_ && !hi_inf_ && lo_ == hi_) return "{" + lo_.get_str() + "}";
  std::string s;
  s += lo_closed_ ? '[' : '(';
  s += lo_inf_ ? "-inf" : lo_.get_str();
  s += ',';
  s += hi_inf_ ? "inf" : hi_.get_str();
  s += hi_closed_ ? ']' : ')';
  return s;
}

bool Interval::lower_less(const Interval& a, const Interval& b) {
  if (a.lo_inf_ != b.lo_inf_) return a.lo_inf_;
  if (a.lo_inf_) return false;
  if (a.lo_ != b.lo_) return a.lo_ < b.lo_;
  return a.lo_closed_ && !b.lo_closed_;
}

Interval intersect(const Interval& a, const Interval& b) {
  if (a.empty_ || b.empty_) return {};
  std::optional<Rational> lo, hi;
  bool lo_closed = false, hi_closed = false;
  if (a.lo_inf_ && b.lo_inf_) {
  } else if (a.lo_inf_ || (!b.lo_inf_ && b.lo_ > a.lo_)) {
    lo = b.lo_;
    lo_closed = b.lo_closed_;
  } else if (b.lo_inf_ || a.lo_ > b.lo_) {
    lo = a.lo_;
    lo_closed = a.lo_closed_;
  } else {
    lo = a.lo_;
    lo_closed = a.lo_closed_ && b.lo_closed_;
  }
  if (a.hi_inf_ && b.hi_inf_) {
  } else if (a.hi_inf_ || (!b.hi_inf_ && b.hi_ < a.hi_)) {
    hi = b.hi_;
    hi_closed = b.hi_closed_;
  } else if (b.hi_inf_ || a.hi_ < b.hi_) {
    hi = a.hi_;
    hi_closed = a.hi_closed_;
  } else {
    hi = a.hi_;
    hi_closed = a.hi_closed_ && b.hi_closed_;
  }
  return Interval::make(lo, lo_closed, hi, hi_closed);
}

bool operator==(const Interval& a, const Interval& b) {
  return a.empty_ == b.empty_ && a.lo_inf_ == b.lo_inf_ && a.hi_inf_ == b.hi_inf_ &&
         a.lo_closed_ == b.lo_closed_ && a.hi_closed_ == b.hi_closed_ && a.lo_ == b.lo_ &&
         a.hi_ == b.hi_;
}

namespace {

// a precedes b in lower-endpoint order; true when a ∪ b is an interval.
bool touches(const Interval& a, const Interval& b) {
  if (a.hi_infinite() || b.lo_infinite()) return true;
  if (a.hi() > b.lo()) return true;
  return a.hi() == b.lo() && (a.hi_closed() || b.lo_closed());
}

// Upper endpoint of a reaches at least as far as b's.
bool upper_covers(const Interval& a, const Interval& b) {
  if (a.hi_infinite()) return true;
  if (b.hi_infinite()) return false;
  if (a.hi() != b.hi()) return a.hi() > b.hi();
  return a.hi_closed() || !b.hi_closed();
}

std::vector<Interval> normalize(std::vector<Interval> in) {
  std::erase_if(in, [](const Interval& i) { return i.is_empty(); });
  std::sort(in.begin(), in.end(), Interval::lower_less);
  std::vector<Interval> out;
  for (auto& next : in) {
    if (!out.empty() && touches(out.back(), next)) {
      Interval& cur = out.back();
      if (!upper_covers(cur, next)) {
        cur = Interval::make(cur.lo_infinite() ? std::nullopt : std::optional<Rational>(cur.lo()),
                             cur.lo_closed(),
                             next.hi_infinite() ? std::nullopt : std::optional<Rational>(next.hi()),
                             next.hi_closed());
      }
    } else {
      out.push_back(std::move(next));
    }
  }
  return out;
}

}  // namespace

IntervalSet::IntervalSet(const Interval& interval) {
  if (!interval.is_empty()) parts_.push_back(interval);
}

IntervalSet::IntervalSet(std::vector<Interval> intervals) : parts_(normalize(std::move(intervals))) {}

bool IntervalSet::bounded() const {
  return std::all_of(parts_.begin(), parts_.end(), [](const Interval& i) { return i.bounded(); });
}

Extended IntervalSet::length() const {
  Extended total(0);
  for (const auto& p : parts_) total = total + p.length();
  return total;
}

bool IntervalSet::contains(const Rational& x) const {
  return std::any_of(parts_.begin(), parts_.end(), [&](const Interval& i) { return i.contains(x); });
}

bool IntervalSet::contains(double x) const {
  return std::any_of(parts_.begin(), parts_.end(), [&](const Interval& i) { return i.contains(x); });
}

Interval IntervalSet::hull() const {
  if (parts_.empty()) return {};
  const Interval& first = parts_.front();
  const Interval& last = parts_.back();
  return Interval::make(first.lo_infinite() ? std::nullopt : std::optional<Rational>(first.lo()),
                        first.lo_closed(),
                        last.hi_infinite() ? std::nullopt : std::optional<Rational>(last.hi()),
                        last.hi_closed());
}

IntervalSet IntervalSet::translated(const Rational& t) const {
  IntervalSet out;
  out.parts_.reserve(parts_.size());
  for (const auto& p : parts_) out.parts_.push_back(p.translated(t));
  return out;
}

IntervalSet IntervalSet::complement() const {
  std::vector<Interval> gaps;
  std::optional<Rational> lo;  // nullopt: -inf
  bool lo_closed = false;
  bool open_left = true;
  for (const auto& p : parts_) {
    if (p.lo_infinite()) {
      open_left = false;
    } else {
      gaps.push_back(Interval::make(open_left ? std::nullopt : lo, lo_closed, p.lo(), !p.lo_closed()));
      open_left = false;
    }
    if (p.hi_infinite()) return IntervalSet(std::move(gaps));
    lo = p.hi();
    lo_closed = !p.hi_closed();
  }
  gaps.push_back(Interval::make(open_left ? std::nullopt : lo, lo_closed, std::nullopt, false));
  return IntervalSet(std::move(gaps));
}

bool IntervalSet::subset_of(const IntervalSet& other) const {
  return subtract(*this, other).is_empty();
}

std::vector<Rational> IntervalSet::endpoints() const {
  std::vector<Rational> out;
  for (const auto& p : parts_) {
    if (!p.lo_infinite()) out.push_back(p.lo());
    if (!p.hi_infinite()) out.push_back(p.hi());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string IntervalSet::str() const {
  if (parts_.empty()) return "empty";
  std::string s;
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    if (i) s += " u ";
    s += parts_[i].str();
  }
  return s;
}

IntervalSet unite(const IntervalSet& a, const IntervalSet& b) {
  std::vector<Interval> all = a.parts_;
  all.insert(all.end(), b.parts_.begin(), b.parts_.end());
  return IntervalSet(std::move(all));
}

IntervalSet intersect(const IntervalSet& a, const IntervalSet& b) {
  std::vector<Interval> out;
  for (const auto& x : a.parts_) {
    for (const auto& y : b.parts_) {
      Interval z = intersect(x, y);
      if (!z.is_empty()) out.push_back(std::move(z));
    }
  }
  return IntervalSet(std::move(out));
}

IntervalSet subtract(const IntervalSet& a, const IntervalSet& b) {
  return intersect(a, b.complement());
}

bool almost_equal(const IntervalSet& a, const IntervalSet& b) {
  return subtract(a, b).length().is_zero() && subtract(b, a).length().is_zero();
}

namespace {

class IntervalParser {
 public:
  explicit IntervalParser(std::string_view text) : text_(text) {}

  IntervalSet parse() {
    std::vector<Interval> parts;
    skip_ws();
    if (consume_word("empty")) {
      expect_end();
      return {};
    }
    do {
      parts.push_back(term());
      skip_ws();
    } while (consume_union());
    expect_end();
    return IntervalSet(std::move(parts));
  }

 private:
  Interval term() {
    skip_ws();
    if (consume_word("R")) return Interval::whole();
    if (consume_word("empty")) return {};
    if (peek() == '{') {
      ++pos_;
      Rational x = parse_rational(until("}"));
      ++pos_;
      return Interval::point(x);
    }
    char open = peek();
    if (open != '[' && open != '(') fail("expected '[', '(' or '{'");
    ++pos_;
    std::string_view lo = until(",");
    ++pos_;
    std::string_view hi = until("])");
    char close = peek();
    ++pos_;
    return Interval::make(bound(lo, true), open == '[', bound(hi, false), close == ']');
  }

  std::optional<Rational> bound(std::string_view s, bool lower) {
    std::string t;
    for (char c : s) {
      if (!std::isspace(static_cast<unsigned char>(c))) t += c;
    }
    if (lower && (t == "-inf" || t == "-infinity")) return std::nullopt;
    if (!lower && (t == "inf" || t == "+inf" || t == "infinity")) return std::nullopt;
    return parse_rational(t);
  }

  std::string_view until(std::string_view stops) {
    std::size_t start = pos_;
    while (pos_ < text_.size() && stops.find(text_[pos_]) == std::string_view::npos) ++pos_;
    if (pos_ >= text_.size()) fail("unterminated interval");
    return text_.substr(start, pos_ - start);
  }

  bool consume_union() {
    skip_ws();
    if (pos_ < text_.size() && (text_[pos_] == 'u' || text_[pos_] == 'U')) {
      ++pos_;
      return true;
    }
    if (text_.substr(pos_, 3) == "\xE2\x88\xAA") {  // ∪
      pos_ += 3;
      return true;
    }
    return false;
  }

  bool consume_word(std::string_view w) {
    if (text_.substr(pos_, w.size()) == w) {
      pos_ += w.size();
      return true;
    }
    return false;
  }

  void expect_end() {
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters");
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  [[noreturn]] void fail(const std::string& why) const {
    throw Error(ErrorKind::Parse, "interval '" + std::string(text_) + "' at column " +
                                      std::to_string(pos_ + 1) + ": " + why);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

IntervalSet parse_interval_set(std::string_view text) { return IntervalParser(text).parse(); }

}  // namespace linf
