#pragma once

#include <compare>
#include <vector>

#include "linf/box.hpp"

namespace linf {

/// The unit cell shifted by base + offset on finitely many coordinates and by
/// tail_offset on every coordinate: the box of points with
/// corner(i) <= x_i <= corner(i) + 1.
struct Cell {
  LatticeVector base;
  SparseVector offset;
  Rational tail_offset{0};

  Rational corner(Index i) const { return tail_offset + Rational(static_cast<long>(base.at(i))) + offset.at(i); }
  Point corner_point() const;
  Box as_box() const;

  friend bool operator==(const Cell& a, const Cell& b);
  friend std::strong_ordering operator<=>(const Cell& a, const Cell& b);
};

Cell cell_at(const LatticeVector& z);

struct CellPiece {
  Cell cell;
  BoxUnion piece;
};

/// Splits u into the finitely many cells it meets, in increasing cell order.
/// Pieces are disjoint (half-open splitting) and lie inside their closed cell.
/// Throws NotFinitelyCellCoverable when a box's tail does not fit in one unit
/// interval or an explicit component is unbounded.
std::vector<CellPiece> cell_decompose(const BoxUnion& u);

/// Measure of a box contained in the cell, computed in the cell's own frame
/// (translated back onto the unit cell).
Extended cell_measure(const Cell& cell, const Box& piece);

/// Supremum measure assembled from per-cell measures; falls back to
/// union_measure when u is not finitely cell-coverable.
Extended patch_measure(const BoxUnion& u);

struct CompatibilityEntry {
  std::size_t sample = 0;
  Extended in_first;   // measure of sample - t inside C
  Extended in_second;  // measure of sample - t2 inside C
  bool pass = false;
};

struct CompatibilityReport {
  std::vector<CompatibilityEntry> entries;
  bool all_pass = true;
};

/// Checks that the cells C+t and C+t2 assign equal measure to every sample in
/// their overlap. Throws SampleOutsideOverlap for a sample outside it.
CompatibilityReport compatibility_check(const SparseVector& t, const SparseVector& t2,
                                        const std::vector<Box>& samples);

struct NZQuery {
  BoxUnion set;
  SparseVector shift;
  Rational threshold;
  std::vector<LatticeVector> window;
  /// Use >= instead of > in the threshold test.
  bool inclusive = false;
};

struct NZResult {
  std::vector<LatticeVector> members;    // sorted lexicographically
  std::vector<LatticeVector> reachable;  // every z with positive intersection measure
  bool window_sufficient = false;        // reachable ⊆ window
};

/// Lattice points z of the window where (set - shift) ∩ (C + z) has measure
/// above the threshold.
NZResult nz_set(const NZQuery& query);

/// Lattice cells C+z meeting u in positive measure.
std::vector<LatticeVector> reachable_cells(const BoxUnion& u);

}  // namespace linf
