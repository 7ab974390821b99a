#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "linf/box.hpp"
#include "linf/measure.hpp"
#include "linf/piecewise.hpp"

namespace linf {

struct Node;

/// Immutable handle to an expression tree describing a function on l-infinity.
class Function {
 public:
  Function();  // the constant 0
  explicit Function(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  const Node& node() const { return *node_; }
  std::string str() const;

 private:
  std::shared_ptr<const Node> node_;
};

struct Constant {
  Rational exact{0};
  std::optional<double> real;  // set for constants given as reals
};
struct Coord {
  Index index = 0;
};
struct Sum {
  std::vector<Function> terms;
};
struct Product {
  std::vector<Function> factors;
};
struct Scale {
  Rational by;
  Function of;
};
/// fn(x_coord)
struct UnaryPiecewise {
  Index coord = 0;
  Piecewise fn;
};
struct Indicator {
  BoxUnion set;
};
/// prod_{first <= i <= last} fn(x_i)
struct IndexProduct {
  Index first = 0, last = 0;
  Piecewise fn;
};

/// Bound A * r^n on sum_{k>n} |term_k|. An infinite A declares a series that
/// converges at every point but not uniformly (an unbounded sum).
struct TailBound {
  Extended scale{0};
  Rational ratio{0};
  Extended at(Index n) const {
    return scale.is_infinite() ? scale : Extended(scale.value() * pow(ratio, static_cast<long>(n)));
  }
};

/// sum_{n >= first} c(n) * prod_{i<n} below(x_i) * at(x_n) * prod_{i>n} 1{x_i in above}
/// with c(n) = sum_j scale_j * base_j^n.
struct Series {
  Index first = 0;
  std::vector<std::pair<Rational, Rational>> coefficient;  // (scale, base)
  Piecewise below;
  Piecewise at;
  IntervalSet above;
  std::optional<TailBound> tail_bound;

  Rational coefficient_at(Index n) const;
};

/// x -> f(x + by)
struct Translate {
  SparseVector by;
  Function of;
};
/// f * 1{|f| <= bound}
struct Clamp {
  Extended bound;
  Function of;
};

struct Node {
  std::variant<Constant, Coord, Sum, Product, Scale, UnaryPiecewise, Indicator, IndexProduct, Series,
               Translate, Clamp>
      v;
};

Function constant(const Rational& c);
Function real_constant(double c);
Function coord(Index i);
Function sum(std::vector<Function> terms);
Function product(std::vector<Function> factors);
Function scale(const Rational& by, Function of);
Function difference(Function a, Function b);
Function piecewise(Index coord, Piecewise fn);
Function indicator(BoxUnion set);
Function index_product(Index first, Index last, Piecewise fn);
/// Throws Domain for a tail bound that is negative or does not decrease to 0.
Function series(Series s);
Function translate(Function of, SparseVector by);
Function clamp(Function of, Extended bound);

Function operator+(Function a, Function b);
Function operator*(Function a, Function b);

/// Exact value at a rational point. Throws FormNotExact when the tree holds
/// real constants and SeriesNotSummable for a series without a tail bound or
/// whose remaining terms diverge at the point.
Rational eval_exact(const Function& f, const Point& x);
double eval(const Function& f, const Point& x);
/// Like eval_exact but every series stops after the term with index `cutoff`.
Rational eval_partial(const Function& f, const Point& x, Index cutoff);

/// Splicing data for a slice: the slice's coordinates live in the cell
/// (x_i -> corner_i + x_i) and coordinates beyond n take the anchor's values.
struct Anchor {
  Point values;
  Cell cell;
};

/// Function of x in [0,1]^dims. The body only holds Constant, UnaryPiecewise
/// (with coord < dims), Sum, Product, Scale and Clamp nodes.
struct SlicedFunction {
  std::size_t dims = 0;
  Function body;

  double operator()(std::span<const double> x) const;
  Rational exact(std::span<const Rational> x) const;
  /// Coordinates the body actually reads.
  std::vector<Index> active() const;
};

/// f_n(x) = f(corner_0 + x_0, ..., corner_n + x_n, a_{n+1}, a_{n+2}, ...)
SlicedFunction slice(const Function& f, const Anchor& anchor, std::size_t n);

struct Support {
  bool known = false;
  BoxUnion sets;  // when known: {f != 0} is inside, up to a null set
};

Support support(const Function& f);

enum class CoverStatus { Finite, NotSigmaFinite, Infinite };

struct CoverResult {
  CoverStatus status = CoverStatus::Finite;
  std::vector<Cell> cells;  // increasing order; empty unless Finite
  std::string reason;
};

/// Finitely many cells covering s up to a null set.
CoverResult sigma_cover(const BoxUnion& s);

/// Fixes the given coordinates and renumbers the remaining ones in increasing
/// order (the k-th free coordinate becomes coordinate k).
Function substitute(const Function& f, const std::map<Index, Rational>& fixed);

/// True when no node holds a real constant.
bool is_exact(const Function& f);

/// A bound on sup |f| over the region by interval enclosures, or nullopt when
/// none is found (series, coordinates over unbounded ranges).
std::optional<Rational> sup_bound(const Function& f, const Box& region);

}  // namespace linf
