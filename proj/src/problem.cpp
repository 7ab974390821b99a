#include "linf/problem.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "linf/catalog.hpp"
#include "linf/error.hpp"
#include "linf/measure.hpp"

namespace linf {

const char* library_version() { return "0.1.0"; }

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw Error(ErrorKind::Parse, path + ": " + msg);
}

std::string key_path(const std::string& path, const std::string& key) { return path + "." + key; }
std::string item_path(const std::string& path, std::size_t k) { return path + "[" + std::to_string(k) + "]"; }

void only_keys(const Json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) fail(key_path(path, k), "unknown key");
  }
}

const Json& need(const Json& j, const std::string& path, const char* key) {
  if (!j.is_object() || !j.contains(key)) fail(path, std::string("missing key '") + key + "'");
  return j.at(key);
}

// Runs fn and prefixes library parse errors with the path.
template <class F>
auto at_path(const std::string& path, F fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Parse && std::string(e.what()).rfind("$", 0) == 0) throw;
    fail(path, e.what());
  }
}

std::string text(const Json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

Rational rat(const Json& j, const std::string& path) {
  if (j.is_number_integer()) return Rational(static_cast<long>(j.get<std::int64_t>()));
  if (j.is_number_float()) fail(path, "exact values are written as strings such as \"1/3\", not floats");
  return at_path(path, [&] { return parse_rational(text(j, path)); });
}

Extended ext(const Json& j, const std::string& path) {
  if (j.is_number_integer()) {
    if (j.get<std::int64_t>() < 0) fail(path, "expected a nonnegative value");
    return Extended(Rational(static_cast<long>(j.get<std::int64_t>())));
  }
  if (j.is_number_float()) fail(path, "exact values are written as strings, not floats");
  return at_path(path, [&] { return parse_extended(text(j, path)); });
}

std::int64_t integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<std::int64_t>();
}

Index idx(const Json& j, const std::string& path) {
  std::int64_t v = integer(j, path);
  if (v < 0) fail(path, "expected a nonnegative index");
  return static_cast<Index>(v);
}

Index idx_key(const std::string& k, const std::string& path) {
  if (k.empty() || k.find_first_not_of("0123456789") != std::string::npos) fail(path, "keys are coordinate indices");
  return static_cast<Index>(std::stoull(k));
}

IntervalSet iset(const Json& j, const std::string& path) {
  return at_path(path, [&] { return parse_interval_set(text(j, path)); });
}

SparseVector svec(const Json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object of index: value");
  SparseVector out;
  for (const auto& [k, v] : j.items()) out.set(idx_key(k, key_path(path, k)), rat(v, key_path(path, k)));
  return out;
}

LatticeVector lvec(const Json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object of index: integer");
  LatticeVector out;
  for (const auto& [k, v] : j.items()) out.set(idx_key(k, key_path(path, k)), integer(v, key_path(path, k)));
  return out;
}

Box box(const Json& j, const std::string& path) {
  only_keys(j, path, {"coords", "tail"});
  std::map<Index, IntervalSet> comps;
  if (j.contains("coords")) {
    const std::string cp = key_path(path, "coords");
    if (!j["coords"].is_object()) fail(cp, "expected an object of index: interval set");
    for (const auto& [k, v] : j["coords"].items()) comps[idx_key(k, key_path(cp, k))] = iset(v, key_path(cp, k));
  }
  IntervalSet tail = j.contains("tail") ? iset(j["tail"], key_path(path, "tail")) : IntervalSet::unit();
  return Box(std::move(comps), std::move(tail));
}

Cell cell(const Json& j, const std::string& path) {
  only_keys(j, path, {"base", "offset", "tail_offset"});
  Cell c;
  if (j.contains("base")) c.base = lvec(j["base"], key_path(path, "base"));
  if (j.contains("offset")) c.offset = svec(j["offset"], key_path(path, "offset"));
  if (j.contains("tail_offset")) c.tail_offset = rat(j["tail_offset"], key_path(path, "tail_offset"));
  return c;
}

Piecewise pw(const Json& j, const std::string& path) {
  if (j.is_string()) {
    if (j == "identity") return Piecewise::identity();
    fail(path, "unknown piecewise shorthand (use \"identity\" or an object)");
  }
  if (!j.is_object() || j.size() != 1) fail(path, "expected one of identity, constant, indicator, pieces");
  const auto& [op, arg] = *j.items().begin();
  const std::string p = key_path(path, op);
  if (op == "constant") return Piecewise::constant(rat(arg, p));
  if (op == "indicator") return Piecewise::indicator(iset(arg, p));
  if (op == "pieces") {
    if (!arg.is_array()) fail(p, "expected an array of pieces");
    std::vector<Piece> pieces;
    for (std::size_t k = 0; k < arg.size(); ++k) {
      const std::string ip = item_path(p, k);
      only_keys(arg[k], ip, {"on", "poly"});
      IntervalSet on = iset(need(arg[k], ip, "on"), key_path(ip, "on"));
      const Json& poly = need(arg[k], ip, "poly");
      if (!poly.is_array()) fail(key_path(ip, "poly"), "expected coefficients, constant term first");
      std::vector<Rational> c;
      for (std::size_t t = 0; t < poly.size(); ++t) c.push_back(rat(poly[t], item_path(key_path(ip, "poly"), t)));
      for (const auto& iv : on.intervals()) pieces.push_back({iv, Polynomial(c)});
    }
    return at_path(p, [&] { return Piecewise(std::move(pieces)); });
  }
  fail(path, "unknown piecewise form '" + op + "'");
}

CoordinateSplit split(const Json& j, const std::string& path) {
  only_keys(j, path, {"v", "rule"});
  CoordinateSplit s;
  if (j.contains("v")) {
    const Json& v = j["v"];
    if (!v.is_array()) fail(key_path(path, "v"), "expected an index list");
    for (std::size_t k = 0; k < v.size(); ++k) s.listed.push_back(idx(v[k], item_path(key_path(path, "v"), k)));
  }
  if (j.contains("rule")) {
    const std::string rp = key_path(path, "rule");
    only_keys(j["rule"], rp, {"modulus", "residue"});
    s.rule = CoordinateSplit::Rule{idx(need(j["rule"], rp, "modulus"), key_path(rp, "modulus")),
                                   idx(need(j["rule"], rp, "residue"), key_path(rp, "residue"))};
  }
  at_path(path, [&] {
    s.validate();
    return 0;
  });
  return s;
}

class FunctionParser {
 public:
  FunctionParser(const Json* raw, Problem& p) : raw_(raw), p_(p) {}

  Function named(const std::string& name, const std::string& path) {
    if (auto it = p_.functions.find(name); it != p_.functions.end()) return it->second;
    if (raw_ && raw_->contains(name)) {
      if (busy_.count(name)) fail(path, "function '" + name + "' refers to itself");
      busy_.insert(name);
      Function f = parse((*raw_)[name], "$.functions." + name);
      busy_.erase(name);
      p_.functions[name] = f;
      return f;
    }
    if (auto f = catalog::by_name(name)) return *f;
    fail(path, "unknown function '" + name + "'");
  }

  Function parse(const Json& j, const std::string& path) {
    if (j.is_string()) return named(j.get<std::string>(), path);
    if (!j.is_object() || j.size() != 1) fail(path, "expected a function name or an object with one operator key");
    const auto& [op, arg] = *j.items().begin();
    const std::string p = key_path(path, op);
    if (op == "ref") return named(text(arg, p), p);
    if (op == "const") return constant(rat(arg, p));
    if (op == "real") {
      if (!arg.is_number()) fail(p, "expected a number");
      return real_constant(arg.get<double>());
    }
    if (op == "coord") return coord(idx(arg, p));
    if (op == "sum" || op == "product") {
      if (!arg.is_array()) fail(p, "expected an array");
      std::vector<Function> parts;
      for (std::size_t k = 0; k < arg.size(); ++k) parts.push_back(parse(arg[k], item_path(p, k)));
      return op == "sum" ? sum(std::move(parts)) : product(std::move(parts));
    }
    if (op == "sub") {
      if (!arg.is_array() || arg.size() != 2) fail(p, "expected [a, b]");
      return difference(parse(arg[0], item_path(p, 0)), parse(arg[1], item_path(p, 1)));
    }
    if (op == "scale") {
      only_keys(arg, p, {"by", "of"});
      return scale(rat(need(arg, p, "by"), key_path(p, "by")), parse(need(arg, p, "of"), key_path(p, "of")));
    }
    if (op == "piecewise") {
      only_keys(arg, p, {"coord", "fn"});
      return piecewise(idx(need(arg, p, "coord"), key_path(p, "coord")), pw(need(arg, p, "fn"), key_path(p, "fn")));
    }
    if (op == "indicator") return indicator(set_expr(arg, p));
    if (op == "index_product") {
      only_keys(arg, p, {"first", "last", "fn"});
      Index a = idx(need(arg, p, "first"), key_path(p, "first"));
      Index b = idx(need(arg, p, "last"), key_path(p, "last"));
      if (b < a) fail(key_path(p, "last"), "last is below first");
      return index_product(a, b, pw(need(arg, p, "fn"), key_path(p, "fn")));
    }
    if (op == "series") return series_expr(arg, p);
    if (op == "translate") {
      only_keys(arg, p, {"by", "of"});
      return translate(parse(need(arg, p, "of"), key_path(p, "of")), svec(need(arg, p, "by"), key_path(p, "by")));
    }
    if (op == "clamp") {
      only_keys(arg, p, {"bound", "of"});
      return clamp(parse(need(arg, p, "of"), key_path(p, "of")), ext(need(arg, p, "bound"), key_path(p, "bound")));
    }
    fail(path, "unknown operator '" + op + "'");
  }

  BoxUnion set_expr(const Json& j, const std::string& path) {
    if (j.is_string()) {
      auto it = p_.sets.find(j.get<std::string>());
      if (it == p_.sets.end()) fail(path, "unknown set '" + j.get<std::string>() + "'");
      return it->second;
    }
    if (j.is_object() && j.contains("union")) {
      only_keys(j, path, {"union"});
      const std::string up = key_path(path, "union");
      if (!j["union"].is_array()) fail(up, "expected an array of boxes");
      std::vector<Box> boxes;
      for (std::size_t k = 0; k < j["union"].size(); ++k) boxes.push_back(box(j["union"][k], item_path(up, k)));
      return BoxUnion(std::move(boxes));
    }
    return BoxUnion(box(j, path));
  }

 private:
  Function series_expr(const Json& j, const std::string& p) {
    only_keys(j, p, {"first", "coefficient", "below", "at", "above", "tail_bound"});
    Series s;
    if (j.contains("first")) s.first = idx(j["first"], key_path(p, "first"));
    const std::string cp = key_path(p, "coefficient");
    const Json& c = need(j, p, "coefficient");
    if (!c.is_array()) fail(cp, "expected [[scale, base], ...]");
    for (std::size_t k = 0; k < c.size(); ++k) {
      const std::string ip = item_path(cp, k);
      if (!c[k].is_array() || c[k].size() != 2) fail(ip, "expected [scale, base]");
      s.coefficient.emplace_back(rat(c[k][0], item_path(ip, 0)), rat(c[k][1], item_path(ip, 1)));
    }
    s.below = pw(need(j, p, "below"), key_path(p, "below"));
    s.at = pw(need(j, p, "at"), key_path(p, "at"));
    s.above = iset(need(j, p, "above"), key_path(p, "above"));
    if (j.contains("tail_bound")) {
      const std::string tp = key_path(p, "tail_bound");
      only_keys(j["tail_bound"], tp, {"scale", "ratio"});
      s.tail_bound = TailBound{ext(need(j["tail_bound"], tp, "scale"), key_path(tp, "scale")),
                               rat(need(j["tail_bound"], tp, "ratio"), key_path(tp, "ratio"))};
    }
    return at_path(p, [&] { return series(std::move(s)); });
  }

  const Json* raw_;
  Problem& p_;
  std::set<std::string> busy_;
};

std::string scalar_text(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

LimitSchedule schedule(const Json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  LimitSchedule s = LimitSchedule::defaults();
  for (const auto& [k, v] : j.items()) {
    const std::string kp = key_path(path, k);
    if (k == "m") {
      if (v == "inf") {
        s.m_values.clear();
        continue;
      }
      if (!v.is_array()) fail(kp, "expected \"inf\" or a list of truncation levels");
      s.m_values.clear();
      for (std::size_t t = 0; t < v.size(); ++t) s.m_values.push_back(ext(v[t], item_path(kp, t)));
    } else if (k == "n") {
      if (!v.is_array()) fail(kp, "expected a list of slice indices");
      s.n_values.clear();
      for (std::size_t t = 0; t < v.size(); ++t) s.n_values.push_back(idx(v[t], item_path(kp, t)));
    } else {
      set_schedule_option(s, k, scalar_text(v), kp);
    }
  }
  at_path(path, [&] {
    s.validate();
    return 0;
  });
  return s;
}

template <class T, class F>
void section(const Json& doc, const char* name, std::map<std::string, T>& out, F parse_one) {
  if (!doc.contains(name)) return;
  const std::string p = std::string("$.") + name;
  if (!doc[name].is_object()) fail(p, "expected an object of named entries");
  for (const auto& [k, v] : doc[name].items()) out[k] = parse_one(v, key_path(p, k));
}

}  // namespace

// ------------------------------------------------------------------ loading

void set_schedule_option(LimitSchedule& s, const std::string& key, const std::string& value,
                         const std::string& where) {
  auto as_int = [&](long lo) {
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size() || v < lo) fail(where, "expected an integer >= " + std::to_string(lo) + ", got '" + value + "'");
    return v;
  };
  auto as_real = [&] {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size() || !(v > 0)) fail(where, "expected a positive number, got '" + value + "'");
    return v;
  };
  auto exponent_range = [&](bool set_min, long e) {
    long lo = 0, hi = 20;
    if (!s.m_values.empty()) {
      lo = static_cast<long>(std::lround(std::log2(s.m_values.front().to_double())));
      hi = static_cast<long>(std::lround(std::log2(s.m_values.back().to_double())));
    }
    (set_min ? lo : hi) = e;
    s.m_values.clear();
    for (long k = lo; k <= hi; ++k) s.m_values.push_back(Extended(pow(Rational(2), k)));
  };
  if (key == "n_max") {
    long n = as_int(0);
    s.n_values.clear();
    for (long k = 0; k <= n; ++k) s.n_values.push_back(static_cast<std::size_t>(k));
  } else if (key == "m_exp_min") {
    exponent_range(true, as_int(-60));
  } else if (key == "m_exp_max") {
    exponent_range(false, as_int(-60));
  } else if (key == "truncation") {
    if (value == "off") {
      s.m_values.clear();
    } else if (value != "on") {
      fail(where, "expected on or off");
    } else if (s.m_values.empty()) {
      s.m_values = LimitSchedule::defaults().m_values;
    }
  } else if (key == "window") {
    s.window = static_cast<int>(as_int(1));
  } else if (key == "epsilon") {
    s.epsilon = as_real();
  } else if (key == "mode") {
    at_path(where, [&] { return s.quadrature.mode = parse_quad_mode(value); });
  } else if (key == "order") {
    s.quadrature.order = static_cast<int>(as_int(1));
  } else if (key == "budget") {
    s.quadrature.budget = static_cast<std::size_t>(as_int(1));
  } else if (key == "tolerance") {
    s.quadrature.tolerance = as_real();
  } else if (key == "seed") {
    s.quadrature.qmc_seed = static_cast<std::uint64_t>(as_int(0));
  } else if (key == "replicates") {
    s.quadrature.qmc_replicates = static_cast<int>(as_int(2));
  } else if (key == "points") {
    s.quadrature.qmc_points = static_cast<std::size_t>(as_int(1));
  } else {
    fail(where, "unknown schedule key '" + key + "'");
  }
  at_path(where, [&] {
    s.validate();
    return 0;
  });
}

Problem parse_problem(const Json& doc) {
  only_keys(doc, "$", {"version", "sets", "functions", "anchors", "splits", "schedules", "cells", "tasks"});
  Problem p;
  FunctionParser none(nullptr, p);
  section(doc, "sets", p.sets, [&](const Json& j, const std::string& path) { return none.set_expr(j, path); });
  section(doc, "splits", p.splits, split);
  p.schedules["default"] = LimitSchedule::defaults();
  section(doc, "schedules", p.schedules, schedule);
  section(doc, "cells", p.cells, [](const Json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of cells");
    std::vector<Cell> out;
    for (std::size_t k = 0; k < j.size(); ++k) out.push_back(cell(j[k], item_path(path, k)));
    return out;
  });
  section(doc, "anchors", p.anchors, [](const Json& j, const std::string& path) {
    only_keys(j, path, {"coords", "tail", "cell"});
    Anchor a;
    if (j.contains("coords")) {
      for (const auto& [k, v] : svec(j["coords"], key_path(path, "coords")).entries()) a.values.coords[k] = v;
    }
    if (j.contains("tail")) a.values.tail = rat(j["tail"], key_path(path, "tail"));
    if (j.contains("cell")) a.cell = cell(j["cell"], key_path(path, "cell"));
    return a;
  });
  if (doc.contains("functions")) {
    const Json& raw = doc["functions"];
    if (!raw.is_object()) fail("$.functions", "expected an object of named entries");
    FunctionParser fp(&raw, p);
    for (const auto& [k, v] : raw.items()) fp.named(k, "$.functions." + k);
  }
  if (doc.contains("tasks")) {
    if (!doc["tasks"].is_array()) fail("$.tasks", "expected an array");
    for (std::size_t k = 0; k < doc["tasks"].size(); ++k) {
      const Json& t = doc["tasks"][k];
      const std::string tp = item_path("$.tasks", k);
      if (!t.is_object()) fail(tp, "expected an object");
      std::string kind = text(need(t, tp, "kind"), key_path(tp, "kind"));
      // Resolve names now so a bad file fails before any work starts.
      if (t.contains("function")) p.function(text(t["function"], key_path(tp, "function")));
      if (t.contains("set") && t["set"].is_string()) p.set(t["set"].get<std::string>());
      if (t.contains("schedule")) p.schedule(text(t["schedule"], key_path(tp, "schedule")));
      if (t.contains("cells")) p.cell_list(text(t["cells"], key_path(tp, "cells")));
      if (t.contains("anchor")) p.anchor(text(t["anchor"], key_path(tp, "anchor")));
      static const std::set<std::string> kinds = {"measure", "integrate", "slice_scan", "invariance",
                                                  "fubini",  "compatibility", "nz"};
      if (!kinds.count(kind)) fail(key_path(tp, "kind"), "unknown task kind '" + kind + "'");
      p.tasks.push_back(t);
    }
  }
  return p;
}

Problem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Parse, path + ": cannot open file");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Parse, path + ": " + e.what());
  }
  return parse_problem(doc);
}

BoxUnion parse_set(const Problem& p, const Json& j, const std::string& path) {
  FunctionParser fp(nullptr, const_cast<Problem&>(p));
  return fp.set_expr(j, path);
}

Function Problem::function(const std::string& name) const {
  if (auto it = functions.find(name); it != functions.end()) return it->second;
  if (auto f = catalog::by_name(name)) return *f;
  throw Error(ErrorKind::Parse, "unknown function '" + name + "'");
}

namespace {
template <class M>
const typename M::mapped_type& lookup(const M& m, const std::string& name, const char* what) {
  auto it = m.find(name);
  if (it == m.end()) throw Error(ErrorKind::Parse, std::string("unknown ") + what + " '" + name + "'");
  return it->second;
}
}  // namespace

const BoxUnion& Problem::set(const std::string& name) const { return lookup(sets, name, "set"); }
const LimitSchedule& Problem::schedule(const std::string& name) const { return lookup(schedules, name, "schedule"); }
const std::vector<Cell>& Problem::cell_list(const std::string& name) const { return lookup(cells, name, "cell list"); }
const Anchor& Problem::anchor(const std::string& name) const { return lookup(anchors, name, "anchor"); }
const CoordinateSplit& Problem::split(const std::string& name) const { return lookup(splits, name, "split"); }

// ------------------------------------------------------------------ reports

namespace {

Json value_json(double v, const std::optional<Rational>& exact) {
  if (exact) return exact->get_str();
  return v;
}

Json sparse_json(const SparseVector& v) {
  Json out = Json::object();
  for (const auto& [i, x] : v.entries()) out[std::to_string(i)] = x.get_str();
  return out;
}

Json lattice_json(const LatticeVector& v) {
  Json out = Json::object();
  for (const auto& [i, x] : v.entries()) out[std::to_string(i)] = x;
  return out;
}

}  // namespace

Json to_json(const Extended& v) { return v.str(); }

Json to_json(const Box& b) {
  Json coords = Json::object();
  for (const auto& [i, c] : b.explicit_components()) coords[std::to_string(i)] = c.str();
  return Json{{"coords", coords}, {"tail", b.tail().str()}};
}

Json to_json(const BoxUnion& u) {
  Json out = Json::array();
  for (const auto& b : u.boxes) out.push_back(to_json(b));
  return out;
}

Json to_json(const Cell& c) {
  return Json{{"base", lattice_json(c.base)}, {"offset", sparse_json(c.offset)}, {"tail_offset", c.tail_offset.get_str()}};
}

Json to_json(const SliceIntegral& r) {
  return Json{{"n", r.n},
              {"M", r.truncation.str()},
              {"value", value_json(r.value, r.exact)},
              {"error", r.error},
              {"exceedance", value_json(r.exceedance, r.exceedance_exact)},
              {"mode", to_string(r.mode)}};
}

Json to_json(const CellIntegral& c, bool with_trace) {
  Json out{{"cell", to_json(c.cell)},   {"piece", to_json(c.piece)},
           {"absolute", c.absolute},     {"status", to_string(c.status)},
           {"value", value_json(c.value, c.exact)}};
  if (c.bound) out["bound"] = c.bound->get_str();
  if (!c.reason.empty()) out["reason"] = c.reason;
  if (with_trace) {
    Json levels = Json::array();
    for (const auto& lv : c.levels) {
      Json trace = Json::array();
      for (const auto& r : lv.trace) trace.push_back(to_json(r));
      levels.push_back(Json{{"M", lv.truncation.str()},
                            {"stabilized", lv.stabilized},
                            {"value", value_json(lv.value, lv.exact)},
                            {"exceedance", lv.exceedance},
                            {"trace", trace}});
    }
    out["levels"] = levels;
  }
  return out;
}

Json to_json(const IntegralResult& r, bool with_trace) {
  Json out{{"status", to_string(r.status)},
           {"value", value_json(r.value, r.exact)},
           {"absolute_integral", value_json(r.absolute_integral, r.absolute_exact)}};
  if (!r.stage.empty()) out["stage"] = r.stage;
  if (!r.reason.empty()) out["reason"] = r.reason;
  out["warnings"] = r.warnings;
  Json cells = Json::array();
  for (const auto& c : r.cells_used) cells.push_back(to_json(c));
  out["cells"] = cells;
  auto list = [&](const std::vector<CellIntegral>& xs) {
    Json a = Json::array();
    for (const auto& c : xs) a.push_back(to_json(c, with_trace));
    return a;
  };
  out["pieces"] = list(r.pieces);
  out["absolute_pieces"] = list(r.absolute_pieces);
  out["untruncated"] = list(r.untruncated);
  return out;
}

Json to_json(const LimitSchedule& s) {
  Json m = Json::array();
  for (const auto& x : s.m_values) m.push_back(x.str());
  return Json{{"n", s.n_values},
              {"m", m},
              {"window", s.window},
              {"epsilon", s.epsilon},
              {"quadrature",
               {{"mode", to_string(s.quadrature.mode)},
                {"order", s.quadrature.order},
                {"budget", s.quadrature.budget},
                {"tolerance", s.quadrature.tolerance},
                {"seed", s.quadrature.qmc_seed},
                {"replicates", s.quadrature.qmc_replicates},
                {"points", s.quadrature.qmc_points}}}};
}

int exit_code(LimitStatus s) {
  switch (s) {
    case LimitStatus::Converged: return 0;
    case LimitStatus::Diverged:
    case LimitStatus::NotIntegrable: return 1;
    case LimitStatus::Inconclusive: return 3;
  }
  return 3;
}

// -------------------------------------------------------------------- tasks

namespace {

struct Expect {
  Rational value;
  std::optional<double> tolerance;
};

std::optional<Expect> expectation(const Json& t, const std::string& tp) {
  if (!t.contains("expect")) return std::nullopt;
  const Json& e = t["expect"];
  const std::string ep = key_path(tp, "expect");
  if (e.is_object()) {
    only_keys(e, ep, {"value", "tolerance"});
    Expect out{rat(need(e, ep, "value"), key_path(ep, "value")), std::nullopt};
    if (e.contains("tolerance")) {
      if (!e["tolerance"].is_number()) fail(key_path(ep, "tolerance"), "expected a number");
      out.tolerance = e["tolerance"].get<double>();
    }
    return out;
  }
  return Expect{rat(e, ep), std::nullopt};
}

bool matches(const Expect& e, double value, const std::optional<Rational>& exact, double default_tol) {
  if (exact && !e.tolerance) return *exact == e.value;
  return std::abs(value - e.value.get_d()) <= e.tolerance.value_or(default_tol);
}

std::optional<LimitStatus> expected_status(const Json& t, const std::string& tp) {
  if (!t.contains("expect_status")) return std::nullopt;
  std::string s = text(t["expect_status"], key_path(tp, "expect_status"));
  for (LimitStatus v : {LimitStatus::Converged, LimitStatus::Diverged, LimitStatus::Inconclusive,
                        LimitStatus::NotIntegrable}) {
    if (to_string(v) == s) return v;
  }
  fail(key_path(tp, "expect_status"), "unknown status '" + s + "'");
}

BoxUnion task_set(const Problem& p, const Json& j, const std::string& path) { return parse_set(p, j, path); }

const LimitSchedule& task_schedule(const Problem& p, const Json& t, const std::string& tp) {
  return p.schedule(t.contains("schedule") ? text(t["schedule"], key_path(tp, "schedule")) : "default");
}

TaskOutcome run_measure(const Problem& p, const Json& t, const std::string& tp, TaskOutcome out) {
  only_keys(t, tp, {"kind", "name", "set", "expect"});
  BoxUnion u = task_set(p, need(t, tp, "set"), key_path(tp, "set"));
  Extended m = patch_measure(u);
  out.record["measure"] = m.str();
  if (t.contains("expect")) {
    Extended want = ext(t["expect"], key_path(tp, "expect"));
    out.record["expect"] = want.str();
    out.pass = m == want;
  }
  return out;
}

TaskOutcome run_integrate(const Problem& p, const Json& t, const std::string& tp, TaskOutcome out) {
  only_keys(t, tp, {"kind", "name", "function", "schedule", "cells", "no_truncation", "expect", "expect_status", "trace"});
  Function f = p.function(text(need(t, tp, "function"), key_path(tp, "function")));
  LimitSchedule s = task_schedule(p, t, tp);
  if (t.value("no_truncation", false)) s = s.untruncated();
  std::optional<std::vector<Cell>> cells;
  if (t.contains("cells")) cells = p.cell_list(text(t["cells"], key_path(tp, "cells")));
  auto want = expectation(t, tp);
  auto want_status = expected_status(t, tp);
  IntegralResult r = integrate_global(f, s, cells);
  out.record["schedule"] = to_json(s);
  out.record["result"] = to_json(r, t.value("trace", false));
  out.exit = exit_code(r.status);
  out.pass = r.status == LimitStatus::Converged;
  if (want_status) {
    out.record["expect_status"] = to_string(*want_status);
    out.pass = r.status == *want_status;
  }
  if (want) {
    out.record["expect"] = want->value.get_str();
    out.pass = out.pass && r.status == LimitStatus::Converged && matches(*want, r.value, r.exact, 2 * s.epsilon);
  }
  return out;
}

TaskOutcome run_slice_scan(const Problem& p, const Json& t, const std::string& tp, TaskOutcome out) {
  only_keys(t, tp, {"kind", "name", "function", "n", "m", "anchor", "cell", "mode", "expect"});
  Function f = p.function(text(need(t, tp, "function"), key_path(tp, "function")));
  const Json& nr = need(t, tp, "n");
  if (!nr.is_array() || nr.size() != 2) fail(key_path(tp, "n"), "expected [first, last]");
  Index n0 = idx(nr[0], item_path(key_path(tp, "n"), 0)), n1 = idx(nr[1], item_path(key_path(tp, "n"), 1));
  if (n1 < n0) fail(key_path(tp, "n"), "last is below first");
  std::vector<Extended> ms{Extended::infinity()};
  if (t.contains("m")) {
    ms.clear();
    const Json& m = t["m"];
    if (!m.is_array() || m.empty()) fail(key_path(tp, "m"), "expected a nonempty list");
    for (std::size_t k = 0; k < m.size(); ++k) ms.push_back(ext(m[k], item_path(key_path(tp, "m"), k)));
  }
  Anchor a;
  if (t.contains("anchor")) a = p.anchor(text(t["anchor"], key_path(tp, "anchor")));
  if (t.contains("cell")) a.cell = cell(t["cell"], key_path(tp, "cell"));
  QuadratureSpec spec;
  spec.mode = QuadMode::Exact;
  if (t.contains("mode")) spec.mode = at_path(key_path(tp, "mode"), [&] { return parse_quad_mode(text(t["mode"], key_path(tp, "mode"))); });
  std::vector<Rational> expect;
  if (t.contains("expect")) {
    const Json& e = t["expect"];
    if (!e.is_array() || e.size() != n1 - n0 + 1) fail(key_path(tp, "expect"), "expected one value per n");
    for (std::size_t k = 0; k < e.size(); ++k) expect.push_back(rat(e[k], item_path(key_path(tp, "expect"), k)));
  }
  Json rows = Json::array();
  for (Index n = n0; n <= n1; ++n) {
    PreparedSlice ps(slice(f, a, n));
    for (std::size_t k = 0; k < ms.size(); ++k) {
      spec.truncation = ms[k];
      SliceIntegral r = ps.integrate(spec);
      rows.push_back(to_json(r));
      if (k == 0 && !expect.empty()) {
        bool ok = r.exact ? *r.exact == expect[n - n0] : std::abs(r.value - expect[n - n0].get_d()) <= r.error;
        out.pass = out.pass && ok;
      }
    }
  }
  out.record["rows"] = rows;
  return out;
}

TaskOutcome run_invariance(const Problem& p, const Json& t, const std::string& tp, TaskOutcome out) {
  only_keys(t, tp, {"kind", "name", "function", "shift", "schedule"});
  Function f = p.function(text(need(t, tp, "function"), key_path(tp, "function")));
  SparseVector shift = svec(need(t, tp, "shift"), key_path(tp, "shift"));
  InvarianceReport r = invariance_check(f, shift, task_schedule(p, t, tp));
  out.record["original"] = to_json(r.original, false);
  out.record["translated"] = to_json(r.translated, false);
  out.record["difference"] = value_json(r.difference, r.exact_difference);
  out.pass = r.pass;
  return out;
}

TaskOutcome run_fubini(const Problem& p, const Json& t, const std::string& tp, TaskOutcome out) {
  only_keys(t, tp, {"kind", "name", "function", "splits", "schedule", "tolerance"});
  Function f = p.function(text(need(t, tp, "function"), key_path(tp, "function")));
  const Json& sj = need(t, tp, "splits");
  const std::string sp = key_path(tp, "splits");
  if (!sj.is_array()) fail(sp, "expected a list of split names or split objects");
  std::vector<CoordinateSplit> splits;
  for (std::size_t k = 0; k < sj.size(); ++k) {
    splits.push_back(sj[k].is_string() ? p.split(sj[k].get<std::string>()) : split(sj[k], item_path(sp, k)));
  }
  std::optional<double> tol;
  if (t.contains("tolerance")) tol = t["tolerance"].get<double>();
  FubiniReport r = fubini_check(f, splits, task_schedule(p, t, tp), tol);
  out.record["direct"] = to_json(r.direct, false);
  Json rows = Json::array();
  for (const auto& c : r.splits) {
    Json row{{"split", c.split.str()},
             {"status", to_string(c.iterated.status)},
             {"value", value_json(c.iterated.value, c.iterated.exact)},
             {"difference", value_json(c.difference, c.exact_difference)},
             {"pass", c.pass}};
    if (!c.note.empty()) row["note"] = c.note;
    if (!c.iterated.warnings.empty()) row["warnings"] = c.iterated.warnings;
    rows.push_back(row);
  }
  out.record["splits"] = rows;
  out.pass = r.pass;
  return out;
}

TaskOutcome run_compatibility(const Problem& p, const Json& t, const std::string& tp, TaskOutcome out) {
  only_keys(t, tp, {"kind", "name", "t", "t2", "samples"});
  SparseVector a = svec(need(t, tp, "t"), key_path(tp, "t")), b = svec(need(t, tp, "t2"), key_path(tp, "t2"));
  const Json& sj = need(t, tp, "samples");
  const std::string sp = key_path(tp, "samples");
  if (!sj.is_array()) fail(sp, "expected a list of boxes");
  std::vector<Box> samples;
  for (std::size_t k = 0; k < sj.size(); ++k) {
    BoxUnion u = task_set(p, sj[k], item_path(sp, k));
    if (u.boxes.size() != 1) fail(item_path(sp, k), "each sample must be a single box");
    samples.push_back(u.boxes[0]);
  }
  CompatibilityReport r = compatibility_check(a, b, samples);
  Json rows = Json::array();
  for (const auto& e : r.entries) {
    rows.push_back(Json{{"sample", e.sample}, {"first", e.in_first.str()}, {"second", e.in_second.str()}, {"pass", e.pass}});
  }
  out.record["entries"] = rows;
  out.pass = r.all_pass;
  return out;
}

TaskOutcome run_nz(const Problem& p, const Json& t, const std::string& tp, TaskOutcome out) {
  only_keys(t, tp, {"kind", "name", "set", "shift", "threshold", "window", "inclusive", "expect"});
  NZQuery q;
  q.set = task_set(p, need(t, tp, "set"), key_path(tp, "set"));
  if (t.contains("shift")) q.shift = svec(t["shift"], key_path(tp, "shift"));
  q.threshold = rat(need(t, tp, "threshold"), key_path(tp, "threshold"));
  q.inclusive = t.value("inclusive", false);
  auto vectors = [&](const Json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected a list of lattice vectors");
    std::vector<LatticeVector> out;
    for (std::size_t k = 0; k < j.size(); ++k) out.push_back(lvec(j[k], item_path(path, k)));
    return out;
  };
  q.window = vectors(need(t, tp, "window"), key_path(tp, "window"));
  NZResult r = nz_set(q);
  Json members = Json::array();
  for (const auto& z : r.members) members.push_back(lattice_json(z));
  out.record["members"] = members;
  out.record["window_sufficient"] = r.window_sufficient;
  if (t.contains("expect")) {
    auto want = vectors(t["expect"], key_path(tp, "expect"));
    std::sort(want.begin(), want.end());
    out.pass = want == r.members;
  }
  return out;
}

}  // namespace

TaskOutcome run_task(const Problem& p, const Json& t, std::size_t index) {
  const std::string tp = item_path("$.tasks", index);
  std::string kind = text(need(t, tp, "kind"), key_path(tp, "kind"));
  auto fresh = [&] {
    TaskOutcome out;
    out.record["task"] = index;
    out.record["kind"] = kind;
    if (t.contains("name")) out.record["name"] = text(t["name"], key_path(tp, "name"));
    return out;
  };
  try {
    if (kind == "measure") return run_measure(p, t, tp, fresh());
    if (kind == "integrate") return run_integrate(p, t, tp, fresh());
    if (kind == "slice_scan") return run_slice_scan(p, t, tp, fresh());
    if (kind == "invariance") return run_invariance(p, t, tp, fresh());
    if (kind == "fubini") return run_fubini(p, t, tp, fresh());
    if (kind == "compatibility") return run_compatibility(p, t, tp, fresh());
    if (kind == "nz") return run_nz(p, t, tp, fresh());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Parse) throw;
    TaskOutcome out = fresh();
    out.record["error"] = Json{{"kind", to_string(e.kind())}, {"message", e.what()}};
    out.pass = false;
    out.exit = e.kind() == ErrorKind::UnknownSupport || e.kind() == ErrorKind::Domain ? 2 : 3;
    return out;
  }
  fail(key_path(tp, "kind"), "unknown task kind '" + kind + "'");
}

}  // namespace linf
