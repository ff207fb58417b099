#pragma once

#include <string>
#include <vector>

#include "sidb/runner.hpp"
#include "sidb/sbfl.hpp"

namespace sidb {

inline constexpr std::size_t kDefaultMaxBreakpoints = 3;

struct Breakpoint {
  int line = 0;
  double score = 0;
  std::string reason;
  std::vector<std::string> watch;

  bool operator==(const Breakpoint&) const = default;
};

struct BreakpointPlan {
  std::string source_path;
  Formula formula = Formula::kOchiai;
  std::vector<std::string> test_ids;  // failing tests the plan was built from
  std::vector<Breakpoint> breakpoints;

  bool operator==(const BreakpointPlan&) const = default;
};

/// Variables visible at the last trace event on `line`: those whose value
/// changed entering that event first, the rest alphabetical. Throws
/// E_NO_TRACE when the run was not traced.
std::vector<std::string> watch_variables(const TestResult& failing_result, int line);

/// Turns the first min(max_n, |ranked|) lines into breakpoints with template
/// reasons. `spectrum` supplies the ef/ep counts quoted in the reasons.
BreakpointPlan plan_breakpoints(const RankedLines& ranked, const CoverageSpectrum& spectrum,
                                const TestResult& failing_result, std::size_t max_n = kDefaultMaxBreakpoints);

enum class PlanFormat { kSidb, kEditor };

std::string export_plan(const BreakpointPlan& plan, PlanFormat format);
BreakpointPlan parse_plan(const std::string& sidb_document);

json to_json(const BreakpointPlan& plan);
BreakpointPlan plan_from_json(const json& j);

}  // namespace sidb
