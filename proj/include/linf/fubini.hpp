#pragma once

#include <optional>
#include <string>
#include <vector>

#include "linf/limit.hpp"

namespace linf {

/// V = listed indices plus, when a rule is set, every i with i % modulus == residue.
/// W is the complement. With a rule both sides are infinite; without one V is finite.
struct CoordinateSplit {
  struct Rule {
    Index modulus = 2;
    Index residue = 0;
    friend bool operator==(const Rule&, const Rule&) = default;
  };
  std::vector<Index> listed;  // sorted, no duplicates after validate()
  std::optional<Rule> rule;

  static CoordinateSplit finite(std::vector<Index> v);
  static CoordinateSplit modular(Index modulus, Index residue, std::vector<Index> extra = {});

  bool in_v(Index i) const;
  bool v_finite() const { return !rule; }
  /// Position of i among the V (resp. W) indices below it.
  Index rank_v(Index i) const;
  Index rank_w(Index i) const { return i - rank_v(i); }
  /// Throws Domain for a rule with modulus < 2 or residue >= modulus.
  void validate();
  std::string str() const;
};

/// Restriction of a box to W, renumbered so the k-th W index becomes k.
Box project_w(const Box& b, const CoordinateSplit& split);
/// Restriction to V, renumbered; only for infinite V.
Box project_v(const Box& b, const CoordinateSplit& split);
/// Lebesgue volume of the V-projection; only for finite V.
Extended v_volume(const Box& b, const CoordinateSplit& split);
/// (measure of the V side) * (measure of the W side).
Extended split_measure(const Box& b, const CoordinateSplit& split);

/// int_V (int_W f d mu_W) d lambda_V for finite V, d mu_V for infinite V.
///
/// Finite V: the V-coordinates are cut at every breakpoint of f, and on each
/// grid cell an open Newton-Cotes rule of matching degree evaluates the inner
/// integral (integrate_global of the substituted f) at rational nodes. This is
/// exact when f is polynomial in x_V between breakpoints. Clamps and real
/// constants fall back to Gauss rules of two orders when |V| <= 2.
/// Infinite V: f is expanded into products of per-coordinate factors, each
/// term's W part is integrated over mu_W and the resulting function of V is
/// integrated over mu_V. Throws SplitUnsupported when neither route applies.
IntegralResult iterated_integrate(const Function& f, const CoordinateSplit& split, const LimitSchedule& sched);

struct SplitComparison {
  CoordinateSplit split;
  IntegralResult iterated;
  double difference = 0;
  std::optional<Rational> exact_difference;
  bool verdict_agrees = false;
  bool pass = false;
  std::string note;
};

struct FubiniReport {
  IntegralResult direct;
  std::vector<SplitComparison> splits;
  bool pass = false;
};

/// Compares iterated and direct integrals per split. A split passes when both
/// verdicts are not-integrable, or both converge and the values agree exactly
/// or within `tolerance` (4 epsilon when unset).
/// Two exact values must be equal. Failures are report entries.
FubiniReport fubini_check(const Function& f, const std::vector<CoordinateSplit>& splits,
                          const LimitSchedule& sched, std::optional<double> tolerance = std::nullopt);

}  // namespace linf
