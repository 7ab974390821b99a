#include "linf/box.hpp"

#include <set>

namespace linf {

SparseVector to_rational(const LatticeVector& v) {
  SparseVector out;
  for (const auto& [i, x] : v.entries()) out.set(i, Rational(static_cast<long>(x)));
  return out;
}

std::string str(const LatticeVector& v) {
  std::string s = "{";
  bool first = true;
  for (const auto& [i, x] : v.entries()) {
    if (!first) s += ", ";
    first = false;
    s += std::to_string(i) + ": " + std::to_string(x);
  }
  return s + "}";
}

std::string str(const SparseVector& v) {
  std::string s = "{";
  bool first = true;
  for (const auto& [i, x] : v.entries()) {
    if (!first) s += ", ";
    first = false;
    s += std::to_string(i) + ": " + x.get_str();
  }
  return s + "}";
}

Box::Box(std::map<Index, IntervalSet> explicit_components, IntervalSet tail)
    : explicit_(std::move(explicit_components)), tail_(std::move(tail)) {
  bool empty = tail_.is_empty();
  for (auto it = explicit_.begin(); it != explicit_.end();) {
    if (it->second.is_empty()) empty = true;
    if (it->second == tail_) {
      it = explicit_.erase(it);
    } else {
      ++it;
    }
  }
  if (empty) {
    explicit_.clear();
    tail_ = IntervalSet();
  }
}

const IntervalSet& Box::component(Index i) const {
  auto it = explicit_.find(i);
  return it == explicit_.end() ? tail_ : it->second;
}

bool Box::contains(const Point& x) const {
  if (is_empty()) return false;
  for (const auto& [i, comp] : explicit_) {
    if (!comp.contains(x.at(i))) return false;
  }
  for (const auto& [i, v] : x.coords) {
    if (!explicit_.count(i) && !tail_.contains(v)) return false;
  }
  return tail_.contains(x.tail);
}

std::string Box::str() const {
  if (is_empty()) return "empty";
  std::string s = "{";
  for (const auto& [i, comp] : explicit_) s += std::to_string(i) + ": " + comp.str() + ", ";
  return s + "tail: " + tail_.str() + "}";
}

Box intersect(const Box& p, const Box& q) {
  if (p.is_empty() || q.is_empty()) return {};
  std::map<Index, IntervalSet> comps;
  for (const auto& [i, c] : p.explicit_components()) comps[i] = intersect(c, q.component(i));
  for (const auto& [i, c] : q.explicit_components()) {
    if (!comps.count(i)) comps[i] = intersect(p.component(i), c);
  }
  return Box(std::move(comps), intersect(p.tail(), q.tail()));
}

Extended measure(const Box& p) {
  if (p.is_empty()) return Extended(0);
  Extended tail_len = p.tail().length();
  Extended tail_factor = tail_len < Extended(1) ? Extended(0)
                         : tail_len == Extended(1) ? Extended(1)
                                                   : Extended::infinity();
  Extended out = tail_factor;
  for (const auto& [i, c] : p.explicit_components()) out = out * c.length();
  return out;
}

Box translate(const Box& p, const SparseVector& t) {
  if (p.is_empty()) return {};
  std::map<Index, IntervalSet> comps = p.explicit_components();
  for (const auto& [i, shift] : t.entries()) {
    comps[i] = p.component(i).translated(shift);
  }
  return Box(std::move(comps), p.tail());
}

bool is_subset(const Box& p, const Box& q) {
  if (p.is_empty()) return true;
  if (q.is_empty()) return false;
  for (const auto& [i, c] : p.explicit_components()) {
    if (!c.subset_of(q.component(i))) return false;
  }
  for (const auto& [i, c] : q.explicit_components()) {
    if (!p.component(i).subset_of(c)) return false;
  }
  return p.tail().subset_of(q.tail());
}

std::vector<Box> subtract(const Box& p, const Box& q) {
  Box common = intersect(p, q);
  if (common.is_empty()) return {p};
  if (!subtract(p.tail(), q.tail()).length().is_zero()) {
    // Either the overlap is null (shared tail shorter than 1) or p has infinite
    // measure; neither difference is finitely representable.
    return {p};
  }
  std::set<Index> idx;
  for (const auto& [i, c] : p.explicit_components()) idx.insert(i);
  for (const auto& [i, c] : q.explicit_components()) idx.insert(i);

  std::vector<Box> out;
  std::map<Index, IntervalSet> prefix = p.explicit_components();
  for (Index i : idx) {
    IntervalSet outside = subtract(p.component(i), q.component(i));
    if (!outside.is_empty()) {
      auto comps = prefix;
      comps[i] = outside;
      Box piece(std::move(comps), p.tail());
      if (!piece.is_empty()) out.push_back(std::move(piece));
    }
    prefix[i] = intersect(p.component(i), q.component(i));
  }
  return out;
}

bool BoxUnion::is_empty() const {
  for (const auto& b : boxes) {
    if (!b.is_empty()) return false;
  }
  return true;
}

std::string BoxUnion::str() const {
  std::string s = "[";
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (i) s += ", ";
    s += boxes[i].str();
  }
  return s + "]";
}

BoxUnion disjointify(const BoxUnion& u) {
  std::vector<Box> done;
  for (const auto& b : u.boxes) {
    if (b.is_empty()) continue;
    std::vector<Box> pieces{b};
    for (const auto& d : done) {
      std::vector<Box> next;
      for (const auto& p : pieces) {
        auto rest = subtract(p, d);
        next.insert(next.end(), std::make_move_iterator(rest.begin()),
                    std::make_move_iterator(rest.end()));
      }
      pieces = std::move(next);
      if (pieces.empty()) break;
    }
    done.insert(done.end(), std::make_move_iterator(pieces.begin()),
                std::make_move_iterator(pieces.end()));
  }
  return BoxUnion(std::move(done));
}

Extended union_measure(const BoxUnion& u) {
  Extended total(0);
  for (const auto& b : disjointify(u).boxes) {
    total = total + measure(b);
    if (total.is_infinite()) break;
  }
  return total;
}

BoxUnion intersect(const BoxUnion& u, const Box& b) {
  BoxUnion out;
  for (const auto& x : u.boxes) {
    Box y = intersect(x, b);
    if (!y.is_empty()) out.boxes.push_back(std::move(y));
  }
  return out;
}

BoxUnion intersect(const BoxUnion& u, const BoxUnion& v) {
  BoxUnion out;
  for (const auto& b : v.boxes) {
    auto part = intersect(u, b);
    out.boxes.insert(out.boxes.end(), part.boxes.begin(), part.boxes.end());
  }
  return out;
}

BoxUnion translate(const BoxUnion& u, const SparseVector& t) {
  BoxUnion out;
  for (const auto& b : u.boxes) out.boxes.push_back(translate(b, t));
  return out;
}

BoxUnion subtract(const BoxUnion& u, const BoxUnion& v) {
  std::vector<Box> pieces = disjointify(u).boxes;
  for (const auto& d : v.boxes) {
    std::vector<Box> next;
    for (const auto& p : pieces) {
      auto rest = subtract(p, d);
      next.insert(next.end(), rest.begin(), rest.end());
    }
    pieces = std::move(next);
  }
  return BoxUnion(std::move(pieces));
}

}  // namespace linf
