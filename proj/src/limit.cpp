#include "linf/limit.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <map>
#include <thread>

#include "linf/error.hpp"

namespace linf {

LimitSchedule LimitSchedule::defaults() {
  LimitSchedule s;
  for (std::size_t n = 0; n <= 64; ++n) s.n_values.push_back(n);
  for (long k = 0; k <= 20; ++k) s.m_values.push_back(Extended(pow(Rational(2), k)));
  return s;
}

LimitSchedule LimitSchedule::untruncated() const {
  LimitSchedule s = *this;
  s.m_values.clear();
  return s;
}

void LimitSchedule::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorKind::Domain, "schedule: " + why); };
  if (!(epsilon > 0)) fail("epsilon must be positive");
  if (window < 2) fail("window must be at least 2");
  if (n_values.empty()) fail("n values must not be empty");
  if (!std::is_sorted(n_values.begin(), n_values.end()) ||
      std::adjacent_find(n_values.begin(), n_values.end()) != n_values.end()) {
    fail("n values must be strictly increasing");
  }
  for (std::size_t k = 0; k < m_values.size(); ++k) {
    if (m_values[k].is_zero()) fail("M values must be positive");
    if (k > 0 && !(m_values[k - 1] < m_values[k])) fail("M values must be strictly increasing");
  }
}

std::string to_string(LimitStatus s) {
  switch (s) {
    case LimitStatus::Converged: return "converged";
    case LimitStatus::Diverged: return "diverged";
    case LimitStatus::Inconclusive: return "inconclusive";
    case LimitStatus::NotIntegrable: return "not-integrable";
  }
  return "?";
}

Anchor default_anchor(const Cell& cell, const BoxUnion& piece) {
  Anchor a{cell.corner_point(), cell};
  const Rational& tau = cell.tail_offset;
  IntervalSet cell_tail = Interval::closed(tau, tau + 1);
  for (const auto& b : piece.boxes) {
    IntervalSet t = intersect(b.tail(), cell_tail);
    if (t.length().is_zero()) continue;
    if (!t.contains(tau)) {
      Interval h = t.hull();
      a.values.tail = (h.lo() + h.hi()) / 2;
    }
    break;
  }
  return a;
}

namespace {

class SliceCache {
 public:
  SliceCache(Function g, Anchor a) : g_(std::move(g)), a_(std::move(a)) {}
  const PreparedSlice& at(std::size_t n) {
    auto it = slices_.find(n);
    if (it == slices_.end()) it = slices_.emplace(n, PreparedSlice(slice(g_, a_, n), memo_)).first;
    return it->second;
  }
  // sup |g| over the slices' domain (the cell, with the anchor inside it).
  const std::optional<Rational>& bound() {
    if (!bound_done_) {
      Box box = a_.cell.as_box();
      if (box.contains(a_.values)) bound_ = sup_bound(g_, box);
      bound_done_ = true;
    }
    return bound_;
  }

 private:
  Function g_;
  Anchor a_;
  std::optional<Rational> bound_;
  bool bound_done_ = false;
  std::shared_ptr<NumericMemo> memo_ = std::make_shared<NumericMemo>();
  std::map<std::size_t, PreparedSlice> slices_;
};

// Last `w` differences of xs all below eps.
bool settled(const std::vector<double>& xs, int w, double eps) {
  if (xs.size() < static_cast<std::size_t>(w) + 1) return false;
  for (std::size_t k = xs.size() - w; k < xs.size(); ++k) {
    if (!(std::abs(xs[k] - xs[k - 1]) < eps)) return false;
  }
  return true;
}

// Last `w` increments all at least eps and non-decreasing.
bool growing(const std::vector<double>& xs, int w, double eps) {
  if (xs.size() < static_cast<std::size_t>(w) + 1) return false;
  double prev = -INFINITY;
  for (std::size_t k = xs.size() - w; k < xs.size(); ++k) {
    double step = xs[k] - xs[k - 1];
    if (!(step >= eps) || step < prev) return false;
    prev = step;
  }
  return true;
}

InnerLimit inner_limit(SliceCache& cache, const LimitSchedule& sched, const Extended& m, bool absolute) {
  QuadratureSpec spec = sched.quadrature;
  spec.truncation = m;
  spec.absolute = absolute;
  InnerLimit out;
  out.truncation = m;
  std::vector<double> values;
  bool all_exact = true;
  for (std::size_t n : sched.n_values) {
    SliceIntegral r = cache.at(n).integrate(spec);
    all_exact = all_exact && r.exact.has_value();
    values.push_back(r.value);
    out.trace.push_back(std::move(r));
    // Exact slices are cheap once prepared, so they always run the whole
    // schedule: an early plateau (the counterexample at M = 100 is exactly 1
    // up to n = 9) must not be mistaken for the limit.
    if (!all_exact && settled(values, sched.window, sched.epsilon)) break;
  }
  out.stabilized = settled(values, sched.window, sched.epsilon);
  out.diverging = !out.stabilized && growing(values, sched.window, sched.epsilon);
  const SliceIntegral& last = out.trace.back();
  out.value = last.value;
  out.exceedance = last.exceedance;
  if (all_exact && out.trace.size() > static_cast<std::size_t>(sched.window)) {
    bool constant = true;
    for (std::size_t k = out.trace.size() - sched.window; k < out.trace.size(); ++k) {
      constant = constant && *out.trace[k].exact == *out.trace[k - 1].exact;
    }
    if (constant) out.exact = last.exact;
  }
  return out;
}

CellIntegral run_cell(SliceCache& cache, CellIntegral out, const LimitSchedule& sched) {
  try {
    if (!sched.truncated()) {
      InnerLimit lv = inner_limit(cache, sched, Extended::infinity(), out.absolute);
      out.value = lv.value;
      out.exact = lv.exact;
      out.status = lv.stabilized ? LimitStatus::Converged
                                 : (lv.diverging ? LimitStatus::Diverged : LimitStatus::Inconclusive);
      if (!lv.stabilized) out.reason = "inner limit did not stabilize over the n schedule";
      out.levels.push_back(std::move(lv));
      return out;
    }
    // Truncating at M >= sup |f| drops nothing, so levels below the first such
    // M cannot change the limit. Two levels are still compared.
    std::size_t first = 0;
    if (const auto& b = cache.bound()) {
      out.bound = b;
      const auto& ms = sched.m_values;
      auto it = std::find_if(ms.begin(), ms.end(), [&](const Extended& m) { return m >= Extended(*b); });
      if (it != ms.end()) first = std::min<std::size_t>(it - ms.begin(), ms.size() < 2 ? 0 : ms.size() - 2);
    }
    std::vector<double> outer;
    for (std::size_t k = first; k < sched.m_values.size(); ++k) {
      const Extended& m = sched.m_values[k];
      InnerLimit lv = inner_limit(cache, sched, m, out.absolute);
      const InnerLimit* prev = out.levels.empty() ? nullptr : &out.levels.back();
      bool done = prev && prev->stabilized && lv.stabilized && std::abs(lv.value - prev->value) < sched.epsilon &&
                  lv.exceedance < sched.epsilon;
      if (lv.stabilized) outer.push_back(lv.value);
      out.levels.push_back(std::move(lv));
      if (done) {
        const InnerLimit& a = out.levels[out.levels.size() - 2];
        const InnerLimit& b = out.levels.back();
        out.status = LimitStatus::Converged;
        out.value = b.value;
        if (a.exact && b.exact && *a.exact == *b.exact) out.exact = b.exact;
        return out;
      }
    }
    out.value = out.levels.back().value;
    if (growing(outer, sched.window, sched.epsilon)) {
      out.status = LimitStatus::Diverged;
      out.reason = "truncated limits keep growing with M";
    } else {
      out.status = LimitStatus::Inconclusive;
      out.reason = out.levels.back().stabilized ? "truncated limits did not settle over the M schedule"
                                                : "inner limit did not stabilize at the largest M";
    }
  } catch (const Error& e) {
    out.status = LimitStatus::Inconclusive;
    out.reason = e.what();
  }
  return out;
}

CellIntegral blank(const Cell& cell, const BoxUnion& piece, const Anchor& anchor, bool absolute) {
  CellIntegral c;
  c.cell = cell;
  c.piece = piece;
  c.anchor = anchor;
  c.absolute = absolute;
  return c;
}

std::size_t thread_count() {
  if (const char* env = std::getenv("LINF_THREADS")) {
    int k = std::atoi(env);
    if (k >= 1) return static_cast<std::size_t>(k);
  }
  return std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 8);
}

// Runs task(k) for k < count on a few threads. Results land in fixed slots,
// so the caller's reduction order never depends on scheduling.
template <class Task>
void parallel_for(std::size_t count, Task task) {
  std::size_t threads = std::min(thread_count(), count);
  if (threads <= 1) {
    for (std::size_t k = 0; k < count; ++k) task(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < count; k = next++) task(k);
    });
  }
}

struct Pieces {
  std::vector<Cell> cells;
  std::vector<BoxUnion> regions;  // S n B_i minus earlier cells
  // B_i minus earlier cells, or nullopt for the whole cell. Since f vanishes
  // off its support, f * 1{mask} equals f * 1{region}.
  std::vector<std::optional<BoxUnion>> masks;
  LimitStatus status = LimitStatus::Converged;
  std::string stage, reason;
};

Pieces cover_pieces(const Function& f, const std::optional<std::vector<Cell>>& given) {
  Pieces out;
  Support sup = support(f);
  BoxUnion s;
  if (given) {
    out.cells = *given;
    s = sup.known ? sup.sets : BoxUnion(Box::whole());
  } else {
    if (!sup.known) {
      throw Error(ErrorKind::UnknownSupport, "support of " + f.str() + " is unknown; give the cells to integrate over");
    }
    CoverResult cover = sigma_cover(sup.sets);
    if (cover.status != CoverStatus::Finite) {
      out.status = cover.status == CoverStatus::NotSigmaFinite ? LimitStatus::NotIntegrable : LimitStatus::Inconclusive;
      out.stage = "cover";
      out.reason = cover.reason;
      return out;
    }
    out.cells = cover.cells;
    s = sup.sets;
  }
  BoxUnion earlier;
  for (const auto& cell : out.cells) {
    Box b = cell.as_box();
    out.regions.push_back(subtract(intersect(s, b), earlier));
    BoxUnion mask = subtract(BoxUnion(b), earlier);
    bool whole = mask.boxes.size() == 1 && mask.boxes[0] == b;
    out.masks.push_back(whole ? std::nullopt : std::optional<BoxUnion>(std::move(mask)));
    earlier.boxes.push_back(b);
  }
  return out;
}

struct PieceRun {
  CellIntegral absolute, signed_, untruncated;
  bool ran_signed = false, ran_untruncated = false;
};

std::vector<PieceRun> run_pieces(const Function& f, const Pieces& p, const LimitSchedule& sched, bool signed_pass) {
  std::vector<PieceRun> runs(p.cells.size());
  parallel_for(p.cells.size(), [&](std::size_t k) {
    const Cell& cell = p.cells[k];
    const BoxUnion& region = p.regions[k];
    Anchor anchor = default_anchor(cell, region);
    SliceCache cache(p.masks[k] ? f * indicator(*p.masks[k]) : f, anchor);
    PieceRun& r = runs[k];
    r.absolute = run_cell(cache, blank(cell, region, anchor, true), sched);
    if (!signed_pass || r.absolute.status != LimitStatus::Converged) return;
    r.signed_ = run_cell(cache, blank(cell, region, anchor, false), sched);
    r.ran_signed = true;
    if (sched.truncated()) {
      r.untruncated = run_cell(cache, blank(cell, region, anchor, false), sched.untruncated());
      r.ran_untruncated = true;
    }
  });
  return runs;
}

// Sums piece values in cover order; the exact sum survives only if every piece is exact.
template <class Get>
std::pair<double, std::optional<Rational>> total(const std::vector<PieceRun>& runs, Get get) {
  double v = 0;
  std::optional<Rational> exact = Rational(0);
  for (const auto& r : runs) {
    const CellIntegral& c = get(r);
    v += c.value;
    if (exact && c.exact) {
      *exact += *c.exact;
    } else {
      exact.reset();
    }
  }
  if (exact) v = exact->get_d();
  return {v, exact};
}

// Status of the |f| pass: a diverging piece means not integrable.
void judge_absolute(const std::vector<PieceRun>& runs, LimitStatus& status, std::string& stage, std::string& reason) {
  status = LimitStatus::Converged;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const CellIntegral& c = runs[k].absolute;
    if (c.status == LimitStatus::Diverged) {
      status = LimitStatus::NotIntegrable;
      stage = "absolute";
      reason = "integral of |f| diverges on piece " + std::to_string(k) + ": " + c.reason;
      return;
    }
    if (c.status != LimitStatus::Converged && status == LimitStatus::Converged) {
      status = LimitStatus::Inconclusive;
      stage = "absolute";
      reason = "integral of |f| on piece " + std::to_string(k) + ": " + c.reason;
    }
  }
}

}  // namespace

CellIntegral integrate_cell(const Function& f, const Cell& cell, const std::optional<Anchor>& anchor,
                            const LimitSchedule& sched, bool absolute, const std::optional<BoxUnion>& piece) {
  sched.validate();
  BoxUnion region = piece ? *piece : BoxUnion(cell.as_box());
  Anchor a = anchor ? *anchor : default_anchor(cell, region);
  a.cell = cell;
  SliceCache cache(piece ? f * indicator(*piece) : f, a);
  return run_cell(cache, blank(cell, region, a, absolute), sched);
}

IntegrabilityReport integrability_check(const Function& f, const LimitSchedule& sched,
                                        const std::optional<std::vector<Cell>>& cells) {
  sched.validate();
  IntegrabilityReport out;
  Pieces p = cover_pieces(f, cells);
  out.cells = p.cells;
  if (p.status != LimitStatus::Converged) {
    out.status = p.status;
    out.stage = p.stage;
    out.reason = p.reason;
    return out;
  }
  auto runs = run_pieces(f, p, sched, false);
  judge_absolute(runs, out.status, out.stage, out.reason);
  if (out.status == LimitStatus::Converged) {
    std::tie(out.absolute_integral, out.absolute_exact) =
        total(runs, [](const PieceRun& r) -> const CellIntegral& { return r.absolute; });
  }
  for (auto& r : runs) out.evidence.push_back(std::move(r.absolute));
  return out;
}

IntegralResult integrate_global(const Function& f, const LimitSchedule& sched,
                                const std::optional<std::vector<Cell>>& cells) {
  sched.validate();
  IntegralResult out;
  Pieces p = cover_pieces(f, cells);
  out.cells_used = p.cells;
  if (p.status != LimitStatus::Converged) {
    out.status = p.status;
    out.stage = p.stage;
    out.reason = p.reason;
    return out;
  }
  auto runs = run_pieces(f, p, sched, true);
  judge_absolute(runs, out.status, out.stage, out.reason);
  for (const auto& r : runs) out.absolute_pieces.push_back(r.absolute);
  if (out.status != LimitStatus::Converged) return out;
  std::tie(out.absolute_integral, out.absolute_exact) =
      total(runs, [](const PieceRun& r) -> const CellIntegral& { return r.absolute; });

  for (std::size_t k = 0; k < runs.size(); ++k) {
    const CellIntegral& c = runs[k].signed_;
    out.pieces.push_back(c);
    if (c.status != LimitStatus::Converged && out.status == LimitStatus::Converged) {
      out.status = LimitStatus::Inconclusive;
      out.stage = "signed";
      out.reason = "signed integral on piece " + std::to_string(k) + ": " + c.reason;
    }
  }
  std::tie(out.value, out.exact) = total(runs, [](const PieceRun& r) -> const CellIntegral& { return r.signed_; });

  bool all_untruncated = sched.truncated();
  for (const auto& r : runs) {
    if (!r.ran_untruncated) continue;
    out.untruncated.push_back(r.untruncated);
    all_untruncated = all_untruncated && r.untruncated.status == LimitStatus::Converged;
  }
  if (sched.truncated()) {
    if (all_untruncated) {
      auto [v, e] = total(runs, [](const PieceRun& r) -> const CellIntegral& { return r.untruncated; });
      if (std::abs(v - out.value) >= sched.epsilon) {
        out.warnings.push_back("untruncated slice limits give " + std::to_string(v) + " but the truncated limit is " +
                               std::to_string(out.value) + "; the untruncated limit is not reliable for unbounded f");
      }
    } else {
      out.warnings.push_back("untruncated slice limits did not converge");
    }
  } else {
    out.warnings.push_back("truncation disabled: the untruncated limit can differ from the integral for unbounded f");
  }
  return out;
}

InvarianceReport invariance_check(const Function& f, const SparseVector& t, const LimitSchedule& sched) {
  InvarianceReport out;
  out.original = integrate_global(f, sched);
  out.translated = integrate_global(translate(f, t), sched);
  out.difference = out.original.value - out.translated.value;
  if (out.original.exact && out.translated.exact) out.exact_difference = *out.original.exact - *out.translated.exact;
  bool both = out.original.status == LimitStatus::Converged && out.translated.status == LimitStatus::Converged;
  out.pass = both && (out.exact_difference ? sgn(*out.exact_difference) == 0
                                           : std::abs(out.difference) <= 2 * sched.epsilon);
  return out;
}

}  // namespace linf
