// linf: command-line front end for measures, integrals and checks on R^N.
//
// Exit codes: 0 ok, 1 not integrable / diverged / verify failure,
// 2 usage or parse error, 3 inconclusive.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "linf/error.hpp"
#include "linf/measure.hpp"
#include "linf/problem.hpp"

using namespace linf;

namespace {

struct Options {
  std::string file;
  std::string out;
  std::string csv;
};

std::string format_value(double v, const std::optional<Rational>& exact) {
  if (exact) return exact->get_str();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Numeric results are shown on the epsilon grid; the report keeps the raw value.
std::string format_rounded(double v, double epsilon) {
  int digits = std::clamp(static_cast<int>(std::ceil(-std::log10(epsilon))), 0, 17);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s = buf;
  if (s.find('.') != std::string::npos) {
    s.erase(s.find_last_not_of('0') + 1);
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

std::string cell_text(const Json& j) {
  if (j.is_string()) return j.get<std::string>();
  return j.dump();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Parse, path + ": cannot write file");
  out << text;
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) { row(header); }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) text_ << ',';
      const std::string& c = cells[k];
      if (c.find_first_of(",\"\n") == std::string::npos) {
        text_ << c;
      } else {
        text_ << '"';
        for (char ch : c) text_ << (ch == '"' ? "\"\"" : std::string(1, ch));
        text_ << '"';
      }
    }
    text_ << '\n';
  }
  std::string str() const { return text_.str(); }

 private:
  std::ostringstream text_;
};

Problem load(const Options& o) { return o.file.empty() ? parse_problem(Json::object()) : load_problem(o.file); }

Json header(const std::string& command, const Options& o) {
  return Json{{"tool", "linf"}, {"version", library_version()}, {"command", command}, {"file", o.file}};
}

void finish(const Options& o, const Json& report, const Csv& csv) {
  if (!o.out.empty()) write_text(o.out, report.dump(2) + "\n");
  if (!o.csv.empty()) write_text(o.csv, csv.str());
}

// ---------------------------------------------------------------- measure

int cmd_measure(const Options& o, const std::string& set_arg) {
  Problem p = load(o);
  BoxUnion u;
  if (p.sets.count(set_arg)) {
    u = p.set(set_arg);
  } else {
    Json j;
    try {
      j = Json::parse(set_arg);
    } catch (const nlohmann::json::parse_error&) {
      throw Error(ErrorKind::Parse, "unknown set '" + set_arg + "' (not in the file and not a JSON set)");
    }
    u = parse_set(p, j, "set");
  }
  Extended m = patch_measure(u);
  std::cout << m.str() << "\n";
  Json report = header("measure", o);
  report["set"] = to_json(u);
  report["measure"] = m.str();
  Csv csv({"set", "measure"});
  csv.row({set_arg, m.str()});
  finish(o, report, csv);
  return 0;
}

// -------------------------------------------------------------- integrate

void apply_overrides(LimitSchedule& s, const std::string& list) {
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Parse, "--schedule: expected key=value, got '" + item + "'");
    set_schedule_option(s, item.substr(0, eq), item.substr(eq + 1), "--schedule " + item.substr(0, eq));
  }
}

int cmd_integrate(const Options& o, const std::string& fn, bool no_truncation, const std::string& overrides,
                  const std::string& cells_name) {
  Problem p = load(o);
  Function f = p.function(fn);
  LimitSchedule s = p.schedule("default");
  apply_overrides(s, overrides);
  if (no_truncation) s = s.untruncated();
  std::optional<std::vector<Cell>> cells;
  if (!cells_name.empty()) cells = p.cell_list(cells_name);

  IntegralResult r = integrate_global(f, s, cells);

  if (r.status == LimitStatus::Converged) {
    std::cout << (r.exact ? r.exact->get_str() : format_rounded(r.value, s.epsilon)) << "\n";
    if (!r.exact) std::cerr << "note: numeric value " << format_value(r.value, r.exact) << " shown to epsilon " << s.epsilon << "\n";
  } else {
    std::cout << to_string(r.status);
    if (!r.stage.empty()) std::cout << " (" << r.stage << ")";
    std::cout << "\n";
    if (!r.reason.empty()) std::cerr << "reason: " << r.reason << "\n";
  }
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";

  Json report = header("integrate", o);
  report["function"] = fn;
  report["function_form"] = f.str();
  report["schedule"] = to_json(s);
  report["result"] = to_json(r, true);

  Csv csv({"pass", "piece", "M", "n", "value", "exceedance"});
  auto dump = [&](const char* pass, const std::vector<CellIntegral>& pieces) {
    for (std::size_t k = 0; k < pieces.size(); ++k) {
      for (const auto& lv : pieces[k].levels) {
        for (const auto& t : lv.trace) {
          csv.row({pass, std::to_string(k), lv.truncation.str(), std::to_string(t.n), format_value(t.value, t.exact),
                   format_value(t.exceedance, t.exceedance_exact)});
        }
      }
    }
  };
  dump("absolute", r.absolute_pieces);
  dump("signed", r.pieces);
  dump("untruncated", r.untruncated);
  finish(o, report, csv);
  return exit_code(r.status);
}

// ------------------------------------------------------------- slice-scan

std::pair<long, long> parse_range(const std::string& text) {
  auto dots = text.find("..");
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    long v = -1;
    try {
      v = std::stol(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || v < 0) throw Error(ErrorKind::Parse, "--n: expected a..b with integers, got '" + text + "'");
    return v;
  };
  if (dots == std::string::npos) {
    long v = number(text);
    return {v, v};
  }
  long a = number(text.substr(0, dots)), b = number(text.substr(dots + 2));
  if (b < a) throw Error(ErrorKind::Parse, "--n: empty range '" + text + "'");
  return {a, b};
}

int cmd_slice_scan(const Options& o, const std::string& fn, const std::string& range, const std::string& m_list,
                   const std::string& anchor, const std::string& mode) {
  Problem p = load(o);
  auto [a, b] = parse_range(range);
  Json task{{"kind", "slice_scan"}, {"function", fn}, {"n", {a, b}}};
  Json ms = Json::array();
  std::stringstream in(m_list);
  std::string item;
  while (std::getline(in, item, ',')) ms.push_back(item);
  if (ms.empty()) throw Error(ErrorKind::Parse, "--M: expected a comma separated list");
  task["m"] = ms;
  if (!anchor.empty()) task["anchor"] = anchor;
  if (!mode.empty()) task["mode"] = mode;
  p.function(fn);
  TaskOutcome t;
  try {
    t = run_task(p, task, 0);
  } catch (const Error& e) {
    // Positions inside the synthetic task mean nothing to the user.
    std::string msg = e.what();
    auto colon = msg.find(": ");
    throw Error(ErrorKind::Parse, colon == std::string::npos ? msg : msg.substr(colon + 2));
  }
  if (t.record.contains("error")) {
    std::cerr << "error: " << t.record["error"]["message"].get<std::string>() << "\n";
    return t.exit;
  }
  Csv csv({"n", "M", "value", "error", "exceedance", "mode"});
  std::cout << "n\tM\tvalue\n";
  for (const auto& row : t.record["rows"]) {
    std::string n = std::to_string(row["n"].get<std::size_t>());
    std::cout << n << "\t" << cell_text(row["M"]) << "\t" << cell_text(row["value"]) << "\n";
    csv.row({n, cell_text(row["M"]), cell_text(row["value"]), cell_text(row["error"]), cell_text(row["exceedance"]),
             cell_text(row["mode"])});
  }
  Json report = header("slice-scan", o);
  report["function"] = fn;
  report["rows"] = t.record["rows"];
  finish(o, report, csv);
  return 0;
}

// ----------------------------------------------------------------- verify

int cmd_verify(const Options& o) {
  Problem p = load(o);
  Json report = header("verify", o);
  Json records = Json::array();
  Csv csv({"task", "kind", "name", "pass"});
  bool all = true;
  for (std::size_t k = 0; k < p.tasks.size(); ++k) {
    TaskOutcome t = run_task(p, p.tasks[k], k);
    std::string name = t.record.value("name", std::string());
    std::cout << (t.pass ? "PASS " : "FAIL ") << k << " " << t.record["kind"].get<std::string>();
    if (!name.empty()) std::cout << " " << name;
    std::cout << "\n";
    if (t.record.contains("error")) std::cerr << "task " << k << ": " << t.record["error"]["message"].get<std::string>() << "\n";
    t.record["pass"] = t.pass;
    records.push_back(t.record);
    csv.row({std::to_string(k), t.record["kind"].get<std::string>(), name, t.pass ? "pass" : "fail"});
    all = all && t.pass;
  }
  std::cout << (all ? "all tasks passed" : "some tasks failed") << "\n";
  report["tasks"] = records;
  report["pass"] = all;
  finish(o, report, csv);
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Measures, integrals and Fubini checks on the product space R^N.", "linf"};
  app.set_version_flag("--version", library_version());
  app.require_subcommand(1);
  app.footer("Exit codes: 0 ok, 1 not integrable/diverged/verify failure, 2 usage or parse error, 3 inconclusive.\n"
             "LINF_THREADS sets the worker thread count.");

  Options o;
  auto common = [&](CLI::App* sub, bool need_file) {
    auto* opt = sub->add_option("-f,--file", o.file, "problem file (JSON)");
    if (need_file) opt->required();
    sub->add_option("--out", o.out, "write the JSON report here");
    sub->add_option("--csv", o.csv, "write a CSV table here");
  };

  std::string set_arg;
  auto* measure = app.add_subcommand("measure", "patch measure of a set (a name in the file or a JSON set)");
  measure->add_option("set", set_arg)->required();
  common(measure, false);

  std::string fn, overrides, cells_name;
  bool no_truncation = false;
  auto* integrate = app.add_subcommand("integrate", "global integral as a limit of slice integrals");
  integrate->add_option("function", fn)->required();
  integrate->add_flag("--no-truncation", no_truncation, "use untruncated slice limits (unreliable for unbounded f)");
  integrate->add_option("--schedule", overrides, "overrides such as n_max=40,m_exp_max=12,mode=qmc");
  integrate->add_option("--cells", cells_name, "name of a cell list in the file to integrate over");
  common(integrate, false);

  std::string range, m_list = "inf", anchor, mode;
  auto* scan = app.add_subcommand("slice-scan", "slice integrals for a range of n and truncation levels");
  scan->add_option("function", fn)->required();
  scan->add_option("--n", range, "range a..b")->required();
  scan->add_option("--M", m_list, "truncation levels, e.g. inf,100");
  scan->add_option("--anchor", anchor, "name of an anchor in the file");
  scan->add_option("--mode", mode, "quadrature mode (exact, auto, tensor-gauss, adaptive, qmc)");
  common(scan, false);

  auto* verify = app.add_subcommand("verify", "run every task in the file and compare with its expectation");
  common(verify, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  auto start = std::chrono::steady_clock::now();
  int code = 0;
  try {
    if (*measure) code = cmd_measure(o, set_arg);
    if (*integrate) code = cmd_integrate(o, fn, no_truncation, overrides, cells_name);
    if (*scan) code = cmd_slice_scan(o, fn, range, m_list, anchor, mode);
    if (*verify) code = cmd_verify(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    bool usage = e.kind() == ErrorKind::Parse || e.kind() == ErrorKind::UnknownSupport || e.kind() == ErrorKind::Domain;
    return usage ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::fprintf(stderr, "time: %.3f s\n", secs);
  return code;
}
