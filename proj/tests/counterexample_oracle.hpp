#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "linf/rational.hpp"

namespace linf::testing {

/// Integral over [0,1]^(N+1) of the counterexample slice at the zero anchor,
/// truncated at M (nullopt: no truncation), by exhaustive enumeration of the
/// 3^(N+1) atoms {[0,1/3], (1/3,2/3), [2/3,1]}^(N+1). The formula is read
/// directly off the definition; boundaries are null and ignored.
inline Rational counterexample_enumeration(int n, std::optional<Rational> m) {
  enum Symbol { Low, Mid, High };
  const int dims = n + 1;
  std::vector<int> seq(dims, Low);
  std::vector<std::uint64_t> hits(dims, 0);  // hits[k]: atoms where term k is active
  while (true) {
    auto in_s = [&](int i) { return seq[i] != Mid; };
    auto in_l = [&](int i) { return seq[i] == Low; };
    // Term k needs the prefix in S, x_k in the term's set and all later
    // coordinates in L (those beyond N are the anchor value 0, inside L).
    for (int k = 0; k < dims; ++k) {
      bool ok = k == 0 ? in_s(0) : seq[k] == High;
      for (int i = 0; i < k && ok; ++i) ok = in_s(i);
      for (int i = k + 1; i < dims && ok; ++i) ok = in_l(i);
      if (ok) ++hits[k];
    }
    int i = 0;
    while (i < dims && ++seq[i] == 3) seq[i++] = Low;
    if (i == dims) break;
  }
  Rational total = 0;
  for (int k = 0; k < dims; ++k) {
    Rational value = k == 0 ? ratio(3, 2) : 2 * pow(ratio(3, 2), k);
    if (m && value > *m) continue;
    total += value * Rational(static_cast<long>(hits[k]));
  }
  return total / pow(Rational(3), dims);
}

}  // namespace linf::testing
