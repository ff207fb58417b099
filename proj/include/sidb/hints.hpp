#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sidb/breakpoints.hpp"
#include "sidb/bundle.hpp"
#include "sidb/guardrail.hpp"
#include "sidb/llm.hpp"
#include "sidb/prompts.hpp"
#include "sidb/runner.hpp"
#include "sidb/sbfl.hpp"

namespace sidb {

/// 1 failure explanation, 2 breakpoint announcement, 3 breakpoint reasons,
/// 4 conceptual hint, 5 partial cause reveal, 6 fix direction (never a patch).
inline constexpr int kMaxHintLevel = 6;

enum class DialogueMode { kGenerateHints, kInteractiveGuidance };
enum class Role { kStudent, kAssistant, kSystem };

std::string_view to_string(DialogueMode m);
std::string_view to_string(Role r);
DialogueMode parse_dialogue_mode(std::string_view text);
Role parse_role(std::string_view text);

struct TranscriptEntry {
  Role role = Role::kAssistant;
  std::string text;
  std::string timestamp;
  int level_at_emission = 0;

  bool operator==(const TranscriptEntry&) const = default;
};

struct DialogueState {
  std::string session_id;
  DialogueMode mode = DialogueMode::kGenerateHints;
  int level = 0;
  std::vector<TranscriptEntry> transcript;
  bool solved = false;

  bool operator==(const DialogueState&) const = default;
};

enum class EventKind { kTestsFailed, kMoreHelpRequested, kStudentMessage, kFixVerified };

struct DialogueEvent {
  EventKind kind;
  std::string text;  // student_message only

  static DialogueEvent tests_failed() { return {EventKind::kTestsFailed, {}}; }
  static DialogueEvent more_help() { return {EventKind::kMoreHelpRequested, {}}; }
  static DialogueEvent student_message(std::string t) { return {EventKind::kStudentMessage, std::move(t)}; }
  static DialogueEvent fix_verified() { return {EventKind::kFixVerified, {}}; }
};

enum class TurnKind { kHint, kChat, kNotice, kRefusal, kApology, kCongratulation };
std::string_view to_string(TurnKind k);

struct AssistantTurn {
  std::string text;
  int level = 0;
  TurnKind kind = TurnKind::kHint;
  GuardrailReport guardrail;
};

/// Read-only artifacts the tutor may draw on. Null members are simply absent.
struct TutorContext {
  const AssignmentBundle* bundle = nullptr;
  const SourceFile* submission = nullptr;
  const TestRunReport* report = nullptr;
  const CoverageSpectrum* spectrum = nullptr;
  const RankedLines* ranked = nullptr;
  const BreakpointPlan* plan = nullptr;
};

/// Deterministic explanation of one non-passing result. Private tests reveal
/// only their id and failure message. Throws E_NOT_A_FAILURE.
std::string explain_failure(const TestResult& result, Visibility visibility = Visibility::kPublic,
                            double time_limit_seconds = 10.0);

/// Fixed phrase list ("more help", "hint", "stuck", "next"), whole words.
bool is_escalation_request(std::string_view text);
bool is_solution_request(std::string_view text);

struct HintEngineOptions {
  std::size_t prompt_budget = 12000;
  std::chrono::milliseconds llm_timeout = kDefaultLlmTimeout;
  double test_time_limit = 10.0;
  std::size_t prompt_top_k = 5;
};

std::string utc_timestamp();

class HintEngine {
 public:
  using Clock = std::function<std::string()>;

  explicit HintEngine(std::shared_ptr<LlmClient> llm = nullptr, PromptTemplates templates = PromptTemplates::builtin(),
                      HintEngineOptions options = {}, Clock clock = utc_timestamp);

  /// One step of the tutoring state machine. Throws E_SESSION_SOLVED on a
  /// solved state and E_MODE_VIOLATION on a malformed event.
  std::pair<DialogueState, AssistantTurn> advance(const DialogueState& state, const DialogueEvent& event,
                                                  const TutorContext& ctx) const;

  /// Prompt for `level`; throws E_MISSING_CONTEXT when the level's artifacts
  /// are absent (L1 needs a failing report, L2+ a ranking and plan).
  PromptDocument compose_prompt(const DialogueState& state, int level, const TutorContext& ctx,
                                std::string_view student_message = {}) const;

  /// The deterministic, template-only body of a level's hint.
  std::string level_payload(int level, const TutorContext& ctx) const;

  bool has_context_for(int level, const TutorContext& ctx) const;
  const LlmClient* llm() const { return llm_.get(); }

 private:
  AssistantTurn guarded(std::string text, int level, TurnKind kind, const TutorContext& ctx) const;
  AssistantTurn hint_turn(const DialogueState& state, int level, const TutorContext& ctx) const;
  AssistantTurn chat_turn(const DialogueState& state, const std::string& message, const TutorContext& ctx) const;

  std::shared_ptr<LlmClient> llm_;
  PromptTemplates templates_;
  HintEngineOptions options_;
  Clock clock_;
};

}  // namespace sidb
