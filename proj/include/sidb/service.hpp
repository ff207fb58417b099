#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sidb/breakpoints.hpp"
#include "sidb/bundle.hpp"
#include "sidb/hints.hpp"
#include "sidb/mutation.hpp"
#include "sidb/runner.hpp"
#include "sidb/sbfl.hpp"
#include "sidb/testcheck.hpp"

namespace sidb {

/// Localization results of the latest run. The spectrum is not persisted; it
/// is rebuilt from the report when a session is loaded.
struct SessionArtifacts {
  std::optional<TestRunReport> report;
  std::optional<CoverageSpectrum> spectrum;
  std::optional<RankedLines> ranked;
  std::optional<BreakpointPlan> plan;

  bool operator==(const SessionArtifacts&) const = default;
};

struct Session {
  std::string session_id;
  std::string bundle_id;
  Submission submission;
  DialogueState dialogue;
  SessionArtifacts artifacts;
  std::string created;
  std::string updated;

  bool operator==(const Session&) const = default;
};

/// 128 random bits, lower-case hex.
std::string new_session_id();

json to_json(const DialogueState& d);
DialogueState dialogue_from_json(const json& j);
json to_json(const Session& s);
Session session_from_json(const json& j, const AssignmentBundle& bundle);

/// Loaded bundles by id, each validated at most once.
class BundleRegistry {
 public:
  /// Every immediate subdirectory of `root` holding a bundle.json.
  static std::shared_ptr<BundleRegistry> load_dir(const std::filesystem::path& root);

  void add(AssignmentBundle bundle);
  /// Throws E_BUNDLE_NOT_FOUND.
  std::shared_ptr<const AssignmentBundle> find(const std::string& id) const;
  std::vector<std::string> ids() const;

  /// Cached validation against the bundle's own runner.
  ValidationReport validation(const std::string& id, const Runner& runner);

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<const AssignmentBundle>> bundles_;
  std::map<std::string, ValidationReport> validated_;
};

/// One document per session under `<root>/sessions/`, replaced atomically.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path root);

  void save(const Session& s) const;
  /// Throws E_SESSION_NOT_FOUND.
  json load_document(const std::string& session_id) const;
  bool exists(const std::string& session_id) const;
  std::filesystem::path path_for(const std::string& session_id) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

struct ServiceOptions {
  Formula formula = Formula::kOchiai;
  std::size_t top_k = 10;
  std::size_t max_breakpoints = kDefaultMaxBreakpoints;
  DialogueMode default_mode = DialogueMode::kGenerateHints;
  HintEngineOptions hints;
  std::optional<AdapterConfig> runner_override;
  HintEngine::Clock clock = utc_timestamp;
};

class Service {
 public:
  Service(std::shared_ptr<BundleRegistry> bundles, SessionStore store, std::shared_ptr<LlmClient> llm = nullptr,
          PromptTemplates templates = PromptTemplates::builtin(), ServiceOptions options = {});

  /// Throws E_BUNDLE_NOT_FOUND, E_BUNDLE_INVALID.
  Session create_session(const std::string& bundle_id, Submission submission,
                         std::optional<DialogueMode> mode = std::nullopt);
  Session get(const std::string& session_id);

  /// Run the suite, then spectrum, ranking and plan. All passing raises
  /// fix_verified; otherwise tests_failed when the dialogue is at level 0.
  Session run_and_localize(const std::string& session_id);
  AssistantTurn next_hint(const std::string& session_id);
  /// Throws E_WRONG_MODE in generate_hints mode.
  AssistantTurn chat(const std::string& session_id, const std::string& text);
  /// New source: artifacts reset, transcript and level kept.
  Session update_submission(const std::string& session_id, const std::string& source);

  /// Throws E_MISSING_CONTEXT before the first localizing run.
  BreakpointPlan plan(const std::string& session_id);
  /// Throws E_PRIVATE_TEST for a private test, E_NO_TRACE when absent.
  std::vector<TraceEvent> trace(const std::string& session_id, const std::string& test_id);

  ValidationReport validate_bundle(const std::string& bundle_id);
  json assess_suite(const std::string& bundle_id, const std::vector<MutationOperator>& ops,
                    std::optional<std::size_t> limit, std::uint64_t seed, double threshold);
  CustomTestReport check_custom_tests(const std::string& session_id, const std::vector<TestCase>& tests);

  /// Client-facing view: private test traces and coverage are withheld.
  json view(const Session& s) const;

  BundleRegistry& bundles() { return *bundles_; }
  const SessionStore& store() const { return store_; }
  const HintEngine& engine() const { return engine_; }
  Runner runner_for(const AssignmentBundle& bundle) const;

 private:
  std::shared_ptr<std::mutex> lock_for(const std::string& session_id);
  Session load(const std::string& session_id) const;
  TutorContext context(const Session& s, const AssignmentBundle& bundle) const;
  AssistantTurn apply(Session& s, const AssignmentBundle& bundle, const DialogueEvent& ev);

  std::shared_ptr<BundleRegistry> bundles_;
  SessionStore store_;
  HintEngine engine_;
  ServiceOptions options_;
  std::mutex locks_mu_;
  std::map<std::string, std::shared_ptr<std::mutex>> locks_;
};

json to_json(const AssistantTurn& t);

}  // namespace sidb
