#pragma once

#include <map>
#include <string>
#include <vector>

#include "linf/interval.hpp"
#include "linf/sparse.hpp"

namespace linf {

/// Infinite-dimensional parallelepiped: finitely many explicit per-coordinate
/// sets plus one tail set shared by every other coordinate. Components are
/// finite unions of intervals, so product sets such as ([0,1/3] u [2/3,1])^N
/// are single boxes.
///
/// Canonical form: no explicit component equals the tail, and an empty box has
/// no explicit components and an empty tail.
class Box {
 public:
  /// The empty box.
  Box() = default;
  Box(std::map<Index, IntervalSet> explicit_components, IntervalSet tail);

  static Box unit_cell() { return Box({}, IntervalSet::unit()); }
  static Box whole() { return Box({}, IntervalSet::whole()); }

  const IntervalSet& component(Index i) const;
  const std::map<Index, IntervalSet>& explicit_components() const { return explicit_; }
  const IntervalSet& tail() const { return tail_; }
  bool is_empty() const { return tail_.is_empty(); }
  /// One past the largest explicit index.
  Index explicit_end() const { return explicit_.empty() ? 0 : explicit_.rbegin()->first + 1; }
  bool contains(const Point& x) const;
  std::string str() const;

  friend bool operator==(const Box& a, const Box& b) = default;

 private:
  std::map<Index, IntervalSet> explicit_;
  IntervalSet tail_;
};

Box intersect(const Box& p, const Box& q);

/// Product of explicit lengths times the tail factor: 0 when the tail length is
/// below 1, 1 when it equals 1, +inf above. 0 * inf = 0 and the empty box has
/// measure 0. Endpoint openness never matters.
Extended measure(const Box& p);

Box translate(const Box& p, const SparseVector& t);

/// Coordinatewise inclusion p ⊆ q.
bool is_subset(const Box& p, const Box& q);

/// p minus q, as pairwise disjoint boxes, up to a null set: overlaps the
/// finite representation cannot express (tails that differ on a null set, or
/// an infinite-measure p whose tail escapes q's) are kept inside p.
std::vector<Box> subtract(const Box& p, const Box& q);

/// Finite union of boxes; members may overlap.
struct BoxUnion {
  std::vector<Box> boxes;

  BoxUnion() = default;
  BoxUnion(std::vector<Box> b) : boxes(std::move(b)) {}  // NOLINT
  BoxUnion(Box b) : boxes{std::move(b)} {}                // NOLINT

  bool is_empty() const;
  std::string str() const;
};

/// Pairwise disjoint (up to null sets) refinement with the same union. Only
/// coordinates explicit in some input box are split.
BoxUnion disjointify(const BoxUnion& u);
Extended union_measure(const BoxUnion& u);
BoxUnion intersect(const BoxUnion& u, const Box& b);
BoxUnion intersect(const BoxUnion& u, const BoxUnion& v);
BoxUnion translate(const BoxUnion& u, const SparseVector& t);
/// u minus every box of v (disjoint pieces, up to null sets).
BoxUnion subtract(const BoxUnion& u, const BoxUnion& v);

}  // namespace linf
