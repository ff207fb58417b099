#include "sidb/hints.hpp"

#include <algorithm>
#include <cctype>
#include <ctime>
#include <set>
#include <sstream>

#include "sidb/error.hpp"
#include "sidb/lexer.hpp"

namespace sidb {

namespace {

constexpr std::string_view kRunFirstNotice =
    "Run the tests first so I can see what fails; then I can guide you step by step.";
constexpr std::string_view kGenerateModeNotice =
    "This session is in Generate Hints mode, so free chat is switched off. Ask for the next hint when you "
    "are ready.";
constexpr std::string_view kRefusal =
    "I won't hand you the finished solution, because finding it yourself is the point of this exercise. "
    "I can help you get there: look at the breakpoints, step through the failing test and tell me what "
    "you observe, or ask for the next hint.";
constexpr std::string_view kApology =
    "Sorry, the chat assistant is not reachable right now. Your progress is saved; try again in a moment "
    "or ask for the next hint.";
constexpr std::string_view kCongratulation =
    "All tests pass now. Well done: you tracked down the bug and fixed it yourself.";

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : lower(s)) {
    if (std::isalnum(c) || c == '\'') {
      cur.push_back(static_cast<char>(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool has_phrase(const std::vector<std::string>& w, std::initializer_list<std::string_view> phrase) {
  std::vector<std::string_view> p(phrase);
  if (p.size() > w.size()) return false;
  for (std::size_t i = 0; i + p.size() <= w.size(); ++i) {
    bool ok = true;
    for (std::size_t k = 0; k < p.size() && ok; ++k) ok = w[i + k] == p[k];
    if (ok) return true;
  }
  return false;
}

std::vector<const TestResult*> failing_results(const TutorContext& ctx) {
  std::vector<const TestResult*> out;
  if (ctx.report == nullptr) return out;
  for (const auto& r : ctx.report->results) {
    if (is_failing(r.status)) out.push_back(&r);
  }
  return out;
}

Visibility visibility_of(const TutorContext& ctx, const std::string& test_id) {
  if (ctx.bundle != nullptr) {
    if (const auto* t = ctx.bundle->find_test(test_id)) return t->visibility;
  }
  return Visibility::kPublic;
}

// The failing test the plan was built from, else the first failing test.
const TestResult* focus_failure(const TutorContext& ctx) {
  if (ctx.plan != nullptr && ctx.report != nullptr && !ctx.plan->test_ids.empty()) {
    if (const auto* r = ctx.report->find(ctx.plan->test_ids.front())) return r;
  }
  auto f = failing_results(ctx);
  return f.empty() ? nullptr : f.front();
}

std::string failure_label(const TestResult& r) {
  switch (r.status) {
    case TestStatus::kTimeout: return "timeout";
    case TestStatus::kFailed:
      if (r.failure_kind == FailureKind::kAssertion) return "assertion failure";
      [[fallthrough]];
    default: {
      auto colon = r.message.find(':');
      auto name = trim(r.message.substr(0, colon));
      return name.empty() ? std::string("error") : name;
    }
  }
}

std::optional<int> last_line(const TestResult& r) {
  if (!r.trace || r.trace->empty()) return std::nullopt;
  return r.trace->back().line;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += sep;
    out += items[i];
  }
  return out;
}

std::string line_list(const std::vector<int>& lines) {
  std::vector<std::string> parts;
  for (int l : lines) parts.push_back(std::to_string(l));
  return join(parts, ", ");
}

std::vector<std::string> plan_watch(const BreakpointPlan& plan) {
  std::vector<std::string> out;
  for (const auto& bp : plan.breakpoints) {
    for (const auto& w : bp.watch) {
      if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
    }
  }
  return out;
}

std::string cut(std::string s, std::size_t n) {
  if (s.size() > n) {
    s.resize(n);
    s += "...";
  }
  return s;
}

void scrub_reference(std::string& text, const SourceFile& reference) {
  std::vector<std::string> lines;
  for (const auto& l : reference.lines()) {
    auto t = trim(l);
    if (line_tokens(t).size() >= 2) lines.push_back(t);
  }
  std::sort(lines.begin(), lines.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
  for (const auto& l : lines) {
    std::size_t pos = 0;
    while ((pos = text.find(l, pos)) != std::string::npos) {
      text.replace(pos, l.size(), "[omitted]");
      pos += 9;
    }
  }
}

}  // namespace

std::string_view to_string(DialogueMode m) {
  return m == DialogueMode::kGenerateHints ? "generate_hints" : "interactive_guidance";
}

std::string_view to_string(Role r) {
  switch (r) {
    case Role::kStudent: return "student";
    case Role::kAssistant: return "assistant";
    case Role::kSystem: return "system";
  }
  return "system";
}

DialogueMode parse_dialogue_mode(std::string_view text) {
  if (text == "generate_hints") return DialogueMode::kGenerateHints;
  if (text == "interactive_guidance") return DialogueMode::kInteractiveGuidance;
  throw Error(ErrorCode::kInvalidArgument, "unknown mode '" + std::string(text) + "'", "mode");
}

Role parse_role(std::string_view text) {
  if (text == "student") return Role::kStudent;
  if (text == "assistant") return Role::kAssistant;
  if (text == "system") return Role::kSystem;
  throw Error(ErrorCode::kInvalidArgument, "unknown role '" + std::string(text) + "'", "role");
}

std::string_view to_string(TurnKind k) {
  switch (k) {
    case TurnKind::kHint: return "hint";
    case TurnKind::kChat: return "chat";
    case TurnKind::kNotice: return "notice";
    case TurnKind::kRefusal: return "refusal";
    case TurnKind::kApology: return "apology";
    case TurnKind::kCongratulation: return "congratulation";
  }
  return "notice";
}

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string explain_failure(const TestResult& r, Visibility visibility, double time_limit_seconds) {
  if (!is_failing(r.status)) {
    throw Error(ErrorCode::kNotAFailure, "test " + r.test_id + " passed", r.test_id);
  }
  std::ostringstream out;
  if (visibility == Visibility::kPrivate) {
    out << "Test " << r.test_id << " (private) failed: " << (r.message.empty() ? "no message" : r.message) << ".";
    return out.str();
  }
  switch (r.status) {
    case TestStatus::kTimeout:
      out << "Test " << r.test_id << " did not finish within the time limit of " << time_limit_seconds
          << " s. Look for a loop whose exit condition is never reached.";
      return out.str();
    case TestStatus::kFailed:
      if (r.failure_kind == FailureKind::kAssertion) {
        out << "Test " << r.test_id << " failed an assertion: the program ran to the end but produced the wrong "
            << "result (" << (r.message.empty() ? "AssertionError" : cut(r.message, 300)) << ").";
        break;
      }
      [[fallthrough]];
    default:
      out << "Test " << r.test_id << " raised " << failure_label(r) << " (" << cut(r.message, 300)
          << "): the program crashed before it could produce a result.";
  }
  if (auto l = last_line(r)) out << " The last line executed was line " << *l << ".";
  return out.str();
}

bool is_escalation_request(std::string_view text) {
  auto w = words(text);
  return has_phrase(w, {"more", "help"}) || has_phrase(w, {"hint"}) || has_phrase(w, {"stuck"}) ||
         has_phrase(w, {"next"});
}

bool is_solution_request(std::string_view text) {
  auto w = words(text);
  return has_phrase(w, {"solution"}) || has_phrase(w, {"answer"}) || has_phrase(w, {"the", "code"}) ||
         has_phrase(w, {"fix", "it", "for", "me"}) || has_phrase(w, {"corrected", "code"}) ||
         has_phrase(w, {"write", "it"});
}

HintEngine::HintEngine(std::shared_ptr<LlmClient> llm, PromptTemplates templates, HintEngineOptions options,
                       Clock clock)
    : llm_(std::move(llm)), templates_(std::move(templates)), options_(options), clock_(std::move(clock)) {}

bool HintEngine::has_context_for(int level, const TutorContext& ctx) const {
  if (ctx.report == nullptr || ctx.report->failing_count() == 0) return false;
  if (level <= 1) return true;
  return ctx.ranked != nullptr && ctx.plan != nullptr && !ctx.plan->breakpoints.empty();
}

std::string HintEngine::level_payload(int level, const TutorContext& ctx) const {
  if (!has_context_for(level, ctx)) {
    throw Error(ErrorCode::kMissingContext, "no localization artifacts for level " + std::to_string(level));
  }
  auto failing = failing_results(ctx);
  const TestResult& focus = *focus_failure(ctx);
  std::ostringstream out;

  if (level == 1) {
    out << failing.size() << " of " << ctx.report->results.size() << " tests failing: " << failure_label(focus);
    if (auto l = last_line(focus)) out << " at line " << *l;
    out << "\n";
    for (std::size_t i = 0; i < failing.size() && i < 3; ++i) {
      out << "- " << explain_failure(*failing[i], visibility_of(ctx, failing[i]->test_id), options_.test_time_limit)
          << "\n";
    }
    return out.str();
  }

  const auto& plan = *ctx.plan;
  std::vector<int> lines;
  for (const auto& bp : plan.breakpoints) lines.push_back(bp.line);
  auto watch = plan_watch(plan);
  std::string watch_text = watch.empty() ? "the local variables" : join(watch, ", ");
  const int top = plan.breakpoints.front().line;
  bool hidden = visibility_of(ctx, focus.test_id) == Visibility::kPrivate;

  switch (level) {
    case 2:
      out << "I set " << lines.size() << (lines.size() == 1 ? " breakpoint" : " breakpoints") << " for you at line"
          << (lines.size() == 1 ? " " : "s ") << line_list(lines) << ". Start the debugger on the failing test "
          << focus.test_id << " and watch " << watch_text << " each time execution stops.";
      break;
    case 3:
      out << "Why these breakpoints are worth a look:\n";
      for (const auto& bp : plan.breakpoints) {
        out << "- " << bp.reason << ".";
        if (!bp.watch.empty()) out << " Watch: " << join(bp.watch, ", ") << ".";
        out << "\n";
      }
      break;
    case 4:
      out << "Run test " << focus.test_id << " in the debugger and stop at line " << top << ". Compare the values of "
          << watch_text << " with what line " << top
          << " expects to work with. Is there a value this statement is not prepared for?";
      break;
    case 5: {
      if (hidden || !focus.trace || focus.trace->empty()) {
        out << "Test " << focus.test_id << " fails with: " << (focus.message.empty() ? failure_label(focus) : focus.message)
            << ". Step to line " << top << " and inspect the variables there.";
        break;
      }
      const auto& last = focus.trace->back();
      auto vars = watch_variables(focus, last.line);
      out << "Test " << focus.test_id << " stops at line " << last.line << " with " << failure_label(focus) << ".";
      if (!vars.empty()) {
        out << " At that moment";
        for (std::size_t i = 0; i < vars.size() && i < 3; ++i) {
          out << (i == 0 ? " " : ", ") << vars[i] << " is " << last.locals.at(vars[i]);
        }
        out << ".";
      }
      out << " The statement on line " << last.line << " cannot work with one of these values.";
      break;
    }
    case 6: {
      std::vector<int> sorted = lines;
      std::sort(sorted.begin(), sorted.end());
      out << "Direction for a fix: the problem surfaces around line" << (sorted.size() == 1 ? " " : "s ")
          << line_list(sorted) << ".";
      if (!hidden && focus.trace && !focus.trace->empty()) {
        const auto& last = focus.trace->back();
        auto vars = watch_variables(focus, last.line);
        if (!vars.empty()) {
          out << " Decide what the code should do when " << vars.front() << " is " << last.locals.at(vars.front())
              << ", and make sure that case is handled before line " << last.line << " runs.";
        }
      }
      out << " Write the change yourself, then run the tests again.";
      break;
    }
    default:
      throw Error(ErrorCode::kInvalidArgument, "hint level out of range", "level");
  }
  return out.str();
}

PromptDocument HintEngine::compose_prompt(const DialogueState& state, int level, const TutorContext& ctx,
                                          std::string_view student_message) const {
  (void)state;
  if (level < 1 || level > kMaxHintLevel) throw Error(ErrorCode::kInvalidArgument, "hint level out of range", "level");
  if (!has_context_for(level, ctx)) {
    throw Error(ErrorCode::kMissingContext,
                level <= 1 ? "no failing test report yet" : "level " + std::to_string(level) + " needs a localization run");
  }
  PromptDocument doc;
  doc.bundle_id = ctx.bundle != nullptr ? ctx.bundle->id : std::string();
  doc.level = level;
  doc.student_message = std::string(student_message);
  doc.task_statement = ctx.bundle != nullptr ? trim(ctx.bundle->statement) : std::string();
  doc.forbidden_directive =
      "Never output a complete corrected program, a corrected function, or a replacement line of code. "
      "Never quote the reference solution. Guide the student to discover the fix.";
  for (const auto* r : failing_results(ctx)) {
    doc.failing_tests.push_back(r->test_id + " (" + std::string(to_string(r->status)) +
                                (r->failure_kind ? ", " + std::string(to_string(*r->failure_kind)) : "") +
                                "): " + r->message);
  }
  if (ctx.ranked != nullptr) {
    for (std::size_t i = 0; i < ctx.ranked->lines.size() && i < options_.prompt_top_k; ++i) {
      const auto& rl = ctx.ranked->lines[i];
      std::ostringstream s;
      s << "line " << rl.where.line << ": score ";
      if (rl.score == kMaxScore) {
        s << "max";
      } else {
        s << std::fixed;
        s.precision(2);
        s << rl.score;
      }
      if (ctx.spectrum != nullptr) {
        auto it = ctx.spectrum->lines.find(rl.where);
        if (it != ctx.spectrum->lines.end()) {
          s << ", executed by " << it->second.ef << " failing / " << it->second.ep << " passing tests";
        }
      }
      doc.suspicious_lines.push_back(s.str());
    }
  }
  if (ctx.plan != nullptr && level >= 2) {
    for (const auto& bp : ctx.plan->breakpoints) {
      doc.breakpoints.push_back("line " + std::to_string(bp.line) +
                                (bp.watch.empty() ? "" : ": watch " + join(bp.watch, ", ")));
    }
  }

  auto render = [&] {
    doc.system_preamble = fill_template(templates_.system, {{"forbidden", doc.forbidden_directive}});
    doc.level_directive = fill_template(templates_.levels[static_cast<std::size_t>(level - 1)],
                                        {{"statement", doc.task_statement},
                                         {"failing_tests", join(doc.failing_tests, "\n")},
                                         {"suspicious_lines", join(doc.suspicious_lines, "\n")},
                                         {"breakpoints", join(doc.breakpoints, "\n")},
                                         {"student_message", doc.student_message.empty() ? "(no message)" : doc.student_message},
                                         {"level", std::to_string(level)}});
    if (ctx.bundle != nullptr) {
      scrub_reference(doc.system_preamble, ctx.bundle->reference_source);
      scrub_reference(doc.level_directive, ctx.bundle->reference_source);
    }
  };
  render();
  // Over budget: trim test messages, then drop tests, then the statement,
  // then the student message, and finally hard-cut the directive.
  const auto budget = options_.prompt_budget;
  for (auto& t : doc.failing_tests) {
    if (doc.size() <= budget) break;
    t = cut(t, 120);
    render();
  }
  while (doc.size() > budget && doc.failing_tests.size() > 1) {
    doc.failing_tests.pop_back();
    render();
  }
  if (doc.size() > budget && !doc.task_statement.empty()) {
    auto over = doc.size() - budget;
    doc.task_statement.resize(doc.task_statement.size() > over + 3 ? doc.task_statement.size() - over - 3 : 0);
    if (!doc.task_statement.empty()) doc.task_statement += "...";
    render();
  }
  if (doc.size() > budget && !doc.student_message.empty()) {
    auto over = doc.size() - budget;
    doc.student_message.resize(doc.student_message.size() > over ? doc.student_message.size() - over : 0);
    render();
  }
  if (doc.size() > budget) {
    auto room = budget > doc.system_preamble.size() ? budget - doc.system_preamble.size() : 0;
    doc.level_directive.resize(std::min(doc.level_directive.size(), room));
    if (doc.size() > budget) doc.system_preamble.resize(budget - doc.level_directive.size());
  }
  return doc;
}

AssistantTurn HintEngine::guarded(std::string text, int level, TurnKind kind, const TutorContext& ctx) const {
  AssistantTurn turn;
  turn.level = level;
  turn.kind = kind;
  if (ctx.bundle != nullptr && ctx.submission != nullptr) {
    auto g = guardrail_filter(text, ctx.bundle->reference_source, *ctx.submission);
    turn.text = std::move(g.text);
    turn.guardrail = std::move(g.report);
  } else {
    turn.text = std::move(text);
  }
  return turn;
}

AssistantTurn HintEngine::hint_turn(const DialogueState& state, int level, const TutorContext& ctx) const {
  auto text = level_payload(level, ctx);
  if (llm_) {
    try {
      auto reply = llm_->complete(compose_prompt(state, level, ctx), options_.llm_timeout);
      if (!trim(reply).empty()) text += "\n\n" + trim(reply);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kLlmUnavailable) throw;
      // The template hint stands on its own.
    }
  }
  return guarded(std::move(text), level, TurnKind::kHint, ctx);
}

AssistantTurn HintEngine::chat_turn(const DialogueState& state, const std::string& message,
                                    const TutorContext& ctx) const {
  if (is_solution_request(message)) return guarded(std::string(kRefusal), state.level, TurnKind::kRefusal, ctx);
  int level = std::max(state.level, 1);
  if (!has_context_for(level, ctx)) return guarded(std::string(kRunFirstNotice), state.level, TurnKind::kNotice, ctx);
  if (!llm_) return guarded(std::string(kApology), state.level, TurnKind::kApology, ctx);
  try {
    auto reply = llm_->complete(compose_prompt(state, level, ctx, message), options_.llm_timeout);
    return guarded(trim(reply), state.level, TurnKind::kChat, ctx);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kLlmUnavailable) throw;
    return guarded(std::string(kApology), state.level, TurnKind::kApology, ctx);
  }
}

std::pair<DialogueState, AssistantTurn> HintEngine::advance(const DialogueState& state, const DialogueEvent& event,
                                                            const TutorContext& ctx) const {
  if (state.solved) throw Error(ErrorCode::kSessionSolved, "session " + state.session_id + " is already solved");
  DialogueState next = state;
  AssistantTurn turn;

  auto escalate = [&] {
    int target = std::min(next.level + 1, kMaxHintLevel);
    if (!has_context_for(target, ctx)) return guarded(std::string(kRunFirstNotice), next.level, TurnKind::kNotice, ctx);
    next.level = target;
    return hint_turn(next, target, ctx);
  };

  switch (event.kind) {
    case EventKind::kTestsFailed:
      if (!has_context_for(1, ctx)) {
        throw Error(ErrorCode::kMissingContext, "tests_failed raised without a failing report");
      }
      if (next.level == 0) {
        next.level = 1;
        turn = hint_turn(next, 1, ctx);
      } else {
        turn = guarded(level_payload(1, ctx), next.level, TurnKind::kNotice, ctx);
      }
      break;
    case EventKind::kMoreHelpRequested:
      turn = escalate();
      break;
    case EventKind::kStudentMessage:
      if (trim(event.text).empty()) throw Error(ErrorCode::kModeViolation, "student message is empty");
      next.transcript.push_back({Role::kStudent, event.text, clock_(), next.level});
      if (next.mode == DialogueMode::kGenerateHints) {
        turn = guarded(std::string(kGenerateModeNotice), next.level, TurnKind::kNotice, ctx);
      } else if (is_escalation_request(event.text)) {
        turn = escalate();
      } else {
        turn = chat_turn(next, event.text, ctx);
      }
      break;
    case EventKind::kFixVerified:
      next.solved = true;
      turn = guarded(std::string(kCongratulation), next.level, TurnKind::kCongratulation, ctx);
      break;
  }
  turn.level = next.level;
  next.transcript.push_back({Role::kAssistant, turn.text, clock_(), next.level});
  return {std::move(next), std::move(turn)};
}

}  // namespace sidb
