#pragma once

#include <optional>
#include <string>
#include <vector>

#include "linf/function.hpp"
#include "linf/quadrature.hpp"

namespace linf {

struct LimitSchedule {
  std::vector<std::size_t> n_values;  // increasing
  std::vector<Extended> m_values;     // increasing; empty means no truncation (M = inf only)
  int window = 3;                     // successive differences that must stay below epsilon
  double epsilon = 1e-9;
  QuadratureSpec quadrature;

  /// n = 0..64, M = 2^0..2^20, window 3, epsilon 1e-9.
  static LimitSchedule defaults();
  /// Same n values with M = inf only.
  LimitSchedule untruncated() const;
  bool truncated() const { return !m_values.empty(); }
  /// Throws Domain when the invariants fail.
  void validate() const;
};

enum class LimitStatus { Converged, Diverged, Inconclusive, NotIntegrable };
std::string to_string(LimitStatus s);

/// Inner limit n -> inf at one truncation level.
struct InnerLimit {
  Extended truncation = Extended::infinity();
  std::vector<SliceIntegral> trace;
  bool stabilized = false;
  bool diverging = false;
  double value = 0;
  std::optional<Rational> exact;  // set when the exact slice values stopped changing
  double exceedance = 0;          // lambda{|f_n| > M} at the last n
};

/// Double limit over one cell (or one piece of a cell).
struct CellIntegral {
  Cell cell;
  BoxUnion piece;  // region integrated inside the cell
  Anchor anchor;
  bool absolute = false;
  LimitStatus status = LimitStatus::Inconclusive;
  double value = 0;
  std::optional<Rational> exact;
  std::vector<InnerLimit> levels;
  std::optional<Rational> bound;  // sup |f| on the cell when known; levels with M below it are skipped
  std::string reason;
};

struct IntegralResult {
  LimitStatus status = LimitStatus::Inconclusive;
  double value = 0;
  std::optional<Rational> exact;
  double absolute_integral = 0;
  std::optional<Rational> absolute_exact;
  std::vector<Cell> cells_used;
  std::vector<CellIntegral> pieces;           // signed pass
  std::vector<CellIntegral> absolute_pieces;  // |f| pass
  std::vector<CellIntegral> untruncated;      // diagnostic pass without truncation
  std::string stage;                          // pipeline stage that decided a failure
  std::string reason;
  std::vector<std::string> warnings;
};

/// Anchor used when none is given: the cell corner, with the tail value moved
/// into the piece's tail when the corner's lies outside it.
Anchor default_anchor(const Cell& cell, const BoxUnion& piece);

/// Double limit lim_M lim_n of the integral of f_n 1{|f_n| <= M} over the slice
/// of `cell`, optionally restricted to `piece`.
CellIntegral integrate_cell(const Function& f, const Cell& cell, const std::optional<Anchor>& anchor,
                            const LimitSchedule& sched, bool absolute = false,
                            const std::optional<BoxUnion>& piece = std::nullopt);

struct IntegrabilityReport {
  LimitStatus status = LimitStatus::Inconclusive;  // Converged means integrable
  double absolute_integral = 0;
  std::optional<Rational> absolute_exact;
  std::vector<Cell> cells;
  std::vector<CellIntegral> evidence;
  std::string stage;
  std::string reason;
};

/// Support, sigma-cover and |f| integrals per piece. Throws UnknownSupport
/// when the support is unknown and no cells are given.
IntegrabilityReport integrability_check(const Function& f, const LimitSchedule& sched,
                                        const std::optional<std::vector<Cell>>& cells = std::nullopt);

/// The full pipeline: support, cover, |f| per piece, divergence check, signed
/// integrals per piece and their sum. Pieces are B_i minus the earlier cells.
IntegralResult integrate_global(const Function& f, const LimitSchedule& sched,
                                const std::optional<std::vector<Cell>>& cells = std::nullopt);

struct InvarianceReport {
  IntegralResult original, translated;
  double difference = 0;
  std::optional<Rational> exact_difference;
  bool pass = false;
};

InvarianceReport invariance_check(const Function& f, const SparseVector& t, const LimitSchedule& sched);

}  // namespace linf
