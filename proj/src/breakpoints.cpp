#include "sidb/breakpoints.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "sidb/error.hpp"

namespace sidb {

std::vector<std::string> watch_variables(const TestResult& failing_result, int line) {
  if (!failing_result.trace) {
    throw Error(ErrorCode::kNoTrace, "test " + failing_result.test_id + " was run without tracing",
                failing_result.test_id);
  }
  const auto& trace = *failing_result.trace;
  std::size_t at = trace.size();
  for (std::size_t i = trace.size(); i-- > 0;) {
    if (trace[i].line == line) {
      at = i;
      break;
    }
  }
  if (at == trace.size()) return {};

  const auto& here = trace[at].locals;
  const std::map<std::string, std::string>* before = nullptr;
  for (std::size_t i = at; i-- > 0;) {
    if (trace[i].file == trace[at].file) {
      before = &trace[i].locals;
      break;
    }
  }
  std::vector<std::string> changed, steady;
  for (const auto& [name, value] : here) {
    bool is_changed = false;
    if (before != nullptr) {
      auto it = before->find(name);
      is_changed = it == before->end() || it->second != value;
    }
    (is_changed ? changed : steady).push_back(name);
  }
  changed.insert(changed.end(), steady.begin(), steady.end());
  return changed;
}

namespace {

std::string reason_for(const RankedLine& rl, const LineCounts& c, const std::string& test_id, Formula f) {
  char score[32];
  if (rl.score == kMaxScore) {
    std::snprintf(score, sizeof score, "max");
  } else {
    std::snprintf(score, sizeof score, "%.2f", rl.score);
  }
  std::string who = c.ef == 1 ? "failing test " + test_id
                              : std::to_string(c.ef) + " failing tests (including " + test_id + ")";
  std::string passing = std::to_string(c.ep) + (c.ep == 1 ? " passing test" : " passing tests");
  return "Line " + std::to_string(rl.where.line) + " was executed by " + who + " and " + passing +
         "; suspiciousness " + score + " (" + std::string(to_string(f)) + ")";
}

}  // namespace

BreakpointPlan plan_breakpoints(const RankedLines& ranked, const CoverageSpectrum& spectrum,
                                const TestResult& failing_result, std::size_t max_n) {
  if (ranked.lines.empty()) throw Error(ErrorCode::kEmptyRanking, "ranking is empty");
  if (max_n < 1) throw Error(ErrorCode::kInvalidArgument, "max_n must be >= 1", "max_n");
  BreakpointPlan plan;
  plan.formula = ranked.formula;
  plan.source_path = ranked.lines.front().where.file;
  plan.test_ids = {failing_result.test_id};
  std::size_t n = std::min(max_n, ranked.lines.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rl = ranked.lines[i];
    auto it = spectrum.lines.find(rl.where);
    LineCounts counts = it == spectrum.lines.end() ? LineCounts{} : it->second;
    Breakpoint bp;
    bp.line = rl.where.line;
    bp.score = rl.score;
    bp.reason = reason_for(rl, counts, failing_result.test_id, ranked.formula);
    if (failing_result.trace) bp.watch = watch_variables(failing_result, rl.where.line);
    plan.breakpoints.push_back(std::move(bp));
  }
  return plan;
}

json to_json(const BreakpointPlan& plan) {
  json bps = json::array();
  for (const auto& b : plan.breakpoints) {
    bps.push_back({{"line", b.line}, {"score", b.score}, {"reason", b.reason}, {"watch", b.watch}});
  }
  return json{{"schema", "sidb.plan.v1"},
              {"source", plan.source_path},
              {"formula", to_string(plan.formula)},
              {"tests", plan.test_ids},
              {"breakpoints", bps}};
}

BreakpointPlan plan_from_json(const json& j) {
  if (j.value("schema", std::string()) != "sidb.plan.v1") {
    throw Error(ErrorCode::kInvalidArgument, "not a sidb.plan.v1 document", "schema");
  }
  BreakpointPlan plan;
  plan.source_path = j.at("source").get<std::string>();
  plan.formula = parse_formula(j.at("formula").get<std::string>());
  if (j.contains("tests")) plan.test_ids = j.at("tests").get<std::vector<std::string>>();
  for (const auto& b : j.at("breakpoints")) {
    plan.breakpoints.push_back({b.at("line").get<int>(), b.at("score").get<double>(),
                                b.at("reason").get<std::string>(),
                                b.value("watch", std::vector<std::string>{})});
  }
  return plan;
}

std::string export_plan(const BreakpointPlan& plan, PlanFormat format) {
  if (format == PlanFormat::kSidb) return to_json(plan).dump(2) + "\n";
  json list = json::array();
  for (const auto& b : plan.breakpoints) list.push_back({{"path", plan.source_path}, {"line", b.line}});
  return json{{"breakpoints", list}}.dump(2) + "\n";
}

BreakpointPlan parse_plan(const std::string& doc) {
  try {
    return plan_from_json(json::parse(doc));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("malformed plan: ") + e.what());
  }
}

}  // namespace sidb
