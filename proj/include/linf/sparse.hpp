#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>

#include "linf/rational.hpp"

namespace linf {

using Index = std::size_t;

/// Finitely supported coordinate vector; entries not stored are zero and
/// stored entries are never zero.
template <class T>
class SparseVec {
 public:
  SparseVec() = default;
  SparseVec(std::initializer_list<std::pair<const Index, T>> init) {
    for (const auto& [i, v] : init) set(i, v);
  }

  T at(Index i) const {
    auto it = entries_.find(i);
    return it == entries_.end() ? T(0) : it->second;
  }
  void set(Index i, const T& value) {
    if (value == T(0)) {
      entries_.erase(i);
    } else {
      entries_[i] = value;
    }
  }
  const std::map<Index, T>& entries() const { return entries_; }
  bool is_zero() const { return entries_.empty(); }
  /// One past the largest stored index (0 when zero).
  Index support_end() const { return entries_.empty() ? 0 : entries_.rbegin()->first + 1; }

  SparseVec operator-() const {
    SparseVec out;
    for (const auto& [i, v] : entries_) out.entries_[i] = T(-v);
    return out;
  }
  friend SparseVec operator+(const SparseVec& a, const SparseVec& b) {
    SparseVec out = a;
    for (const auto& [i, v] : b.entries_) out.set(i, T(out.at(i) + v));
    return out;
  }
  friend SparseVec operator-(const SparseVec& a, const SparseVec& b) { return a + (-b); }
  friend bool operator==(const SparseVec& a, const SparseVec& b) { return a.entries_ == b.entries_; }

  /// Lexicographic on the coordinate sequence x_0, x_1, ...
  friend std::strong_ordering operator<=>(const SparseVec& a, const SparseVec& b) {
    auto ia = a.entries_.begin(), ib = b.entries_.begin();
    while (ia != a.entries_.end() || ib != b.entries_.end()) {
      Index ka = ia == a.entries_.end() ? SIZE_MAX : ia->first;
      Index kb = ib == b.entries_.end() ? SIZE_MAX : ib->first;
      // At the smaller index one side holds a nonzero value, the other zero.
      if (ka < kb) return ia->second < T(0) ? std::strong_ordering::less : std::strong_ordering::greater;
      if (kb < ka) return ib->second < T(0) ? std::strong_ordering::greater : std::strong_ordering::less;
      if (ia->second != ib->second) {
        return ia->second < ib->second ? std::strong_ordering::less : std::strong_ordering::greater;
      }
      ++ia;
      ++ib;
    }
    return std::strong_ordering::equal;
  }

 private:
  std::map<Index, T> entries_;
};

using LatticeVector = SparseVec<std::int64_t>;

/// A point of l-infinity that is eventually constant: explicit coordinates
/// (zeros allowed) and one value for every other coordinate.
struct Point {
  std::map<Index, Rational> coords;
  Rational tail{0};

  Rational at(Index i) const {
    auto it = coords.find(i);
    return it == coords.end() ? tail : it->second;
  }
  Index explicit_end() const { return coords.empty() ? 0 : coords.rbegin()->first + 1; }
};

using SparseVector = SparseVec<Rational>;

SparseVector to_rational(const LatticeVector& v);
std::string str(const LatticeVector& v);
std::string str(const SparseVector& v);

}  // namespace linf
