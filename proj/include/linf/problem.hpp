#pragma once

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "linf/fubini.hpp"
#include "linf/limit.hpp"

namespace linf {

using Json = nlohmann::ordered_json;

const char* library_version();

/// A parsed problem file. Every name used by a task resolves at load time.
struct Problem {
  std::map<std::string, Function> functions;
  std::map<std::string, BoxUnion> sets;
  std::map<std::string, Anchor> anchors;
  std::map<std::string, CoordinateSplit> splits;
  std::map<std::string, LimitSchedule> schedules;  // always holds "default"
  std::map<std::string, std::vector<Cell>> cells;
  std::vector<Json> tasks;

  /// File names first, then the built-in catalog. Throws Parse for unknown names.
  Function function(const std::string& name) const;
  const BoxUnion& set(const std::string& name) const;
  const LimitSchedule& schedule(const std::string& name) const;
  const std::vector<Cell>& cell_list(const std::string& name) const;
  const Anchor& anchor(const std::string& name) const;
  const CoordinateSplit& split(const std::string& name) const;
};

/// Throws Error(Parse) whose message starts with the JSON path of the fault.
Problem parse_problem(const Json& doc);
Problem load_problem(const std::string& path);

/// A set written as in the "sets" section, or the name of one.
BoxUnion parse_set(const Problem& p, const Json& j, const std::string& path = "$");

/// "key=value" overrides: n_max, m_exp_min, m_exp_max, window, epsilon, mode,
/// order, budget, tolerance, seed, replicates, points.
void set_schedule_option(LimitSchedule& s, const std::string& key, const std::string& value,
                         const std::string& where = "schedule");

Json to_json(const Extended& v);
Json to_json(const Box& b);
Json to_json(const BoxUnion& u);
Json to_json(const Cell& c);
Json to_json(const SliceIntegral& r);
Json to_json(const CellIntegral& c, bool with_trace);
Json to_json(const IntegralResult& r, bool with_trace);
Json to_json(const LimitSchedule& s);

/// Exit class of a status: 0 converged, 1 not integrable or diverged, 3 inconclusive.
int exit_code(LimitStatus s);

struct TaskOutcome {
  Json record;
  bool pass = true;
  int exit = 0;
};

/// Runs one task. Tasks with an "expect" field pass when the result matches;
/// others pass when they finish with a converged (or exact) result.
TaskOutcome run_task(const Problem& p, const Json& task, std::size_t index);

}  // namespace linf
