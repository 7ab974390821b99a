#pragma once

#include <optional>
#include <string>
#include <vector>

#include "linf/function.hpp"

namespace linf::catalog {

/// 3/2 * 1{x_0 in S} prod_{i>=1} 1{x_i in L}
///   + sum_{n>=1} 2 (3/2)^n prod_{i<n} 1{x_i in S} 1{x_n in H} prod_{i>n} 1{x_i in L}
/// with S = [0,1/3] u [2/3,1], L = [0,1/3], H = [2/3,1]. Integrable with integral 0
/// although every untruncated slice integral at the zero anchor is 1.
Function counterexample();

/// sum_{n>=0} 2^(n+1) prod_{i<n} 1{x_i in [0,1/2]} 1{x_n in (1/2,1]} on [0,1]^N.
/// Each term integrates to 1, so the function is not integrable.
Function divergent_series();

/// Looks up one of the functions above by name ("counterexample", "divergent").
std::optional<Function> by_name(const std::string& name);
std::vector<std::string> names();

}  // namespace linf::catalog
