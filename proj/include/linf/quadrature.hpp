#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "linf/function.hpp"

namespace linf {

enum class QuadMode { Auto, Exact, TensorGauss, Adaptive, Qmc };

std::string to_string(QuadMode m);
QuadMode parse_quad_mode(const std::string& s);

struct QuadratureSpec {
  QuadMode mode = QuadMode::Auto;
  int order = 6;                      // Gauss points per axis
  std::size_t budget = 10'000'000;    // integrand evaluations
  double tolerance = 1e-11;
  Extended truncation = Extended::infinity();  // M in g * 1{|g| <= M}
  bool absolute = false;              // integrate |g| instead of g
  std::uint64_t qmc_seed = 20240101;
  int qmc_replicates = 16;
  std::size_t qmc_points = 1 << 13;   // per replicate
};

struct SliceIntegral {
  std::size_t n = 0;  // slice over [0,1]^(n+1)
  Extended truncation = Extended::infinity();
  double value = 0;
  std::optional<Rational> exact;
  double error = 0;
  /// lambda{|g| > M}, the mass dropped by truncation.
  double exceedance = 0;
  std::optional<Rational> exceedance_exact;
  QuadMode mode = QuadMode::Exact;
  std::size_t evaluations = 0;
};

/// sum_t coef_t * prod_i factors_t[i](x_i)
struct ProductTerm {
  Rational coef;
  std::map<Index, Piecewise> factors;
};

struct ProductForm {
  std::vector<ProductTerm> terms;
};

/// Expands a sliced body into a product form; nullopt when the body holds a
/// clamp or a real constant, or the expansion exceeds `max_terms`.
std::optional<ProductForm> product_form(const Function& body, std::size_t max_terms = 20000);

/// Numeric results keyed by product form, active coordinates and rule. Slices
/// of a cylinder function beyond its last coordinate share one entry.
using NumericMemo = std::map<std::string, SliceIntegral>;

/// Slice with its product form and, once computed, the exact value
/// distribution of a piecewise-constant form. Reused across truncation levels.
/// Not safe to share between threads, and neither is the memo.
class PreparedSlice {
 public:
  explicit PreparedSlice(SlicedFunction g, std::shared_ptr<NumericMemo> memo = nullptr);

  SliceIntegral integrate(const QuadratureSpec& spec) const;

  const SlicedFunction& function() const { return g_; }
  const std::optional<ProductForm>& form() const { return form_; }
  bool piecewise_constant() const { return piecewise_constant_; }

 private:
  const std::map<Rational, Rational>* distribution() const;
  std::optional<SliceIntegral> exact_integral(const QuadratureSpec& spec) const;
  SliceIntegral numeric_integral(const QuadratureSpec& spec, QuadMode mode) const;
  SliceIntegral dispatch(const QuadratureSpec& spec) const;
  SliceIntegral numeric_uncached(const QuadratureSpec& spec, QuadMode mode) const;
  std::optional<SliceIntegral> separable_absolute(const QuadratureSpec& spec) const;
  const std::string& fingerprint() const;

  SlicedFunction g_;
  std::optional<ProductForm> form_;
  bool piecewise_constant_ = false;
  std::optional<Rational> bound_;  // sup |g| over the cube, for polynomial forms
  std::shared_ptr<NumericMemo> memo_;
  mutable std::string fingerprint_;
  mutable std::optional<std::map<Rational, Rational>> dist_;  // value -> Lebesgue weight
  mutable bool dist_failed_ = false;
};

/// Integral of g * 1{|g| <= M} (or of |g|) over [0,1]^dims. Throws FormNotExact
/// when exact mode is requested for a form that has no exact rule, and
/// BudgetExceeded when a fixed rule needs more evaluations than allowed.
SliceIntegral integrate_slice(const SlicedFunction& g, const QuadratureSpec& spec);

/// Lebesgue volume of u within [0,1]^(n+1), reading coordinates 0..n only.
Rational integrate_indicator(const BoxUnion& u, std::size_t n);

/// Gauss-Legendre nodes and weights on [0,1].
struct GaussRule {
  std::vector<double> nodes, weights;
};
const GaussRule& gauss_rule(int order);

}  // namespace linf
