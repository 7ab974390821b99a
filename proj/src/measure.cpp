#include "linf/measure.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "linf/error.hpp"

namespace linf {

Point Cell::corner_point() const {
  Point p;
  p.tail = tail_offset;
  for (const auto& [i, k] : base.entries()) p.coords[i] = corner(i);
  for (const auto& [i, v] : offset.entries()) p.coords[i] = corner(i);
  return p;
}

Box Cell::as_box() const {
  std::map<Index, IntervalSet> comps;
  for (const auto& [i, v] : corner_point().coords) {
    comps[i] = Interval::closed(v, v + 1);
  }
  return Box(std::move(comps), Interval::closed(tail_offset, tail_offset + 1));
}

bool operator==(const Cell& a, const Cell& b) {
  return a.tail_offset == b.tail_offset && a.base == b.base && a.offset == b.offset;
}

std::strong_ordering operator<=>(const Cell& a, const Cell& b) {
  if (a.tail_offset != b.tail_offset) {
    return a.tail_offset < b.tail_offset ? std::strong_ordering::less : std::strong_ordering::greater;
  }
  if (auto c = a.base <=> b.base; c != 0) return c;
  return a.offset <=> b.offset;
}

Cell cell_at(const LatticeVector& z) { return Cell{z, {}, Rational(0)}; }

namespace {

[[noreturn]] void not_coverable(const Box& b, const std::string& why) {
  throw Error(ErrorKind::NotFinitelyCellCoverable, "box " + b.str() + " " + why);
}

std::int64_t to_int(const Rational& q) { return q.get_num().get_si(); }

// Lattice origin for a tail: integral when the tail fits in an integer cell.
Rational tail_origin(const Box& b) {
  Interval hull = b.tail().hull();
  if (!hull.bounded()) not_coverable(b, "has an unbounded tail");
  if (hull.length() > Extended(1)) not_coverable(b, "has a tail wider than one unit");
  Rational k = floor(hull.lo());
  if (hull.hi() <= k + 1) return k;
  return hull.lo();
}

// Splits a bounded component along the lattice tau + Z into half-open slots.
// Zero-length leftovers sitting on a slot's left edge join the slot before.
std::vector<std::pair<std::int64_t, IntervalSet>> lattice_slots(const IntervalSet& comp,
                                                                const Rational& tau) {
  std::vector<std::pair<std::int64_t, IntervalSet>> out;
  Interval hull = comp.hull();
  std::int64_t kmin = to_int(floor(Rational(hull.lo() - tau)));
  std::int64_t kmax = to_int(floor(Rational(hull.hi() - tau)));
  for (std::int64_t k = kmin; k <= kmax; ++k) {
    Rational left = tau + Rational(static_cast<long>(k));
    IntervalSet piece = intersect(comp, Interval::closed_open(left, left + 1));
    if (piece.is_empty()) continue;
    if (piece.length().is_zero() && !out.empty() && out.back().first == k - 1 &&
        !out.back().second.length().is_zero() && piece == IntervalSet(Interval::point(left))) {
      out.back().second = unite(out.back().second, piece);
      continue;
    }
    out.emplace_back(k, std::move(piece));
  }
  return out;
}

}  // namespace

std::vector<CellPiece> cell_decompose(const BoxUnion& u) {
  std::map<Cell, BoxUnion> by_cell;
  for (const auto& b : disjointify(u).boxes) {
    if (b.is_empty()) continue;
    Rational tau = tail_origin(b);
    std::vector<Index> coords;
    std::vector<std::vector<std::pair<std::int64_t, IntervalSet>>> slots;
    for (const auto& [i, comp] : b.explicit_components()) {
      if (!comp.bounded()) not_coverable(b, "has an unbounded component at coordinate " + std::to_string(i));
      coords.push_back(i);
      slots.push_back(lattice_slots(comp, tau));
    }
    // Odometer over the cartesian product of slots.
    std::vector<std::size_t> pick(coords.size(), 0);
    while (true) {
      Cell cell;
      cell.tail_offset = tau;
      std::map<Index, IntervalSet> comps;
      for (std::size_t c = 0; c < coords.size(); ++c) {
        const auto& [k, piece] = slots[c][pick[c]];
        cell.base.set(coords[c], k);
        comps[coords[c]] = piece;
      }
      by_cell[cell].boxes.emplace_back(std::move(comps), b.tail());
      std::size_t c = 0;
      while (c < coords.size() && ++pick[c] == slots[c].size()) pick[c++] = 0;
      if (c == coords.size()) break;
    }
  }
  std::vector<CellPiece> out;
  out.reserve(by_cell.size());
  for (auto& [cell, piece] : by_cell) out.push_back({cell, std::move(piece)});
  return out;
}

Extended cell_measure(const Cell& cell, const Box& piece) {
  if (piece.is_empty()) return Extended(0);
  // Move the piece onto the unit cell, then take finite-dimensional volume
  // times the tail factor (1 for a full unit tail, 0 otherwise).
  Rational shift = -cell.tail_offset;
  std::map<Index, IntervalSet> comps;
  Point corner = cell.corner_point();
  for (const auto& [i, comp] : piece.explicit_components()) comps[i] = comp.translated(-corner.at(i));
  for (const auto& [i, v] : corner.coords) {
    if (!comps.count(i)) comps[i] = piece.tail().translated(-v);
  }
  Box local(std::move(comps), piece.tail().translated(shift));
  Extended tail_len = local.tail().length();
  if (!is_subset(local, Box::unit_cell())) {
    throw Error(ErrorKind::Domain, "piece " + piece.str() + " is not inside its cell");
  }
  Extended volume = tail_len == Extended(1) ? Extended(1) : Extended(0);
  for (const auto& [i, comp] : local.explicit_components()) volume = volume * comp.length();
  return volume;
}

Extended patch_measure(const BoxUnion& u) {
  std::vector<CellPiece> pieces;
  try {
    pieces = cell_decompose(u);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NotFinitelyCellCoverable) throw;
    return union_measure(u);
  }
  Extended total(0);
  for (const auto& cp : pieces) {
    for (const auto& b : cp.piece.boxes) total = total + cell_measure(cp.cell, b);
  }
  return total;
}

CompatibilityReport compatibility_check(const SparseVector& t, const SparseVector& t2,
                                        const std::vector<Box>& samples) {
  Box first = translate(Box::unit_cell(), t);
  Box second = translate(Box::unit_cell(), t2);
  Box overlap = intersect(first, second);
  CompatibilityReport report;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    if (!is_subset(samples[s], overlap)) {
      throw Error(ErrorKind::SampleOutsideOverlap,
                  "sample " + std::to_string(s) + " " + samples[s].str() + " is not inside " + overlap.str());
    }
    CompatibilityEntry e;
    e.sample = s;
    e.in_first = cell_measure(Cell{{}, {}, 0}, translate(samples[s], -t));
    e.in_second = cell_measure(Cell{{}, {}, 0}, translate(samples[s], -t2));
    e.pass = e.in_first == e.in_second;
    report.all_pass = report.all_pass && e.pass;
    report.entries.push_back(std::move(e));
  }
  return report;
}

std::vector<LatticeVector> reachable_cells(const BoxUnion& u) {
  std::set<LatticeVector> found;
  const IntervalSet unit = IntervalSet::unit();
  for (const auto& b : disjointify(u).boxes) {
    if (b.is_empty()) continue;
    if (b.tail().length() > Extended(1)) {
      throw Error(ErrorKind::NotFinitelyCellCoverable, "box " + b.str() + " has tail length above 1");
    }
    // Cells of the integer lattice see the tail on all but finitely many
    // coordinates, so positive measure needs a full unit tail inside [0,1].
    if (intersect(b.tail(), unit).length() < Extended(1)) continue;
    std::vector<Index> coords;
    std::vector<std::vector<std::int64_t>> ks;
    bool null_box = false;
    for (const auto& [i, comp] : b.explicit_components()) {
      if (!comp.bounded()) {
        throw Error(ErrorKind::NotFinitelyCellCoverable, "box " + b.str() + " is unbounded");
      }
      std::vector<std::int64_t> here;
      for (const auto& [k, piece] : lattice_slots(comp, Rational(0))) {
        if (!piece.length().is_zero()) here.push_back(k);
      }
      if (here.empty()) {
        null_box = true;
        break;
      }
      coords.push_back(i);
      ks.push_back(std::move(here));
    }
    if (null_box) continue;
    std::vector<std::size_t> pick(coords.size(), 0);
    while (true) {
      LatticeVector z;
      for (std::size_t c = 0; c < coords.size(); ++c) z.set(coords[c], ks[c][pick[c]]);
      found.insert(z);
      std::size_t c = 0;
      while (c < coords.size() && ++pick[c] == ks[c].size()) pick[c++] = 0;
      if (c == coords.size()) break;
    }
  }
  return {found.begin(), found.end()};
}

NZResult nz_set(const NZQuery& q) {
  if (q.threshold <= 0 || q.threshold >= 1) {
    throw Error(ErrorKind::Domain, "NZ threshold must lie in (0,1), got " + q.threshold.get_str());
  }
  BoxUnion shifted = translate(q.set, -q.shift);
  NZResult out;
  out.reachable = reachable_cells(shifted);
  std::set<LatticeVector> window(q.window.begin(), q.window.end());
  Extended delta(q.threshold);
  for (const auto& z : window) {
    Extended m = union_measure(intersect(shifted, cell_at(z).as_box()));
    if (q.inclusive ? m >= delta : m > delta) out.members.push_back(z);
  }
  out.window_sufficient = std::all_of(out.reachable.begin(), out.reachable.end(),
                                      [&](const LatticeVector& z) { return window.count(z) > 0; });
  return out;
}

}  // namespace linf
