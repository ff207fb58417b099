#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sidb/source.hpp"

namespace sidb {

using json = nlohmann::json;

enum class AdapterKind { kSubprocess, kReplay };

/// How tests are executed. `command_template` arguments may contain the
/// placeholders {SOURCE}, {TEST}, {OUT}, {CAP} and {BUNDLE}. Relative
/// `report_dir` / `record_dir` values resolve against the runner's base dir.
struct AdapterConfig {
  AdapterKind kind = AdapterKind::kReplay;
  std::vector<std::string> command_template;
  std::string report_dir;
  double timeout_per_test = 10.0;
  bool trace_enabled = true;
  int trace_event_cap = 5000;
  std::string record_dir;
  int parallelism = 1;

  /// Throws E_MANIFEST_MALFORMED when an invariant is broken.
  void check() const;

  bool operator==(const AdapterConfig&) const = default;
};

AdapterConfig adapter_config_from_json(const json& j);
json to_json(const AdapterConfig& cfg);

enum class TestStatus { kPassed, kFailed, kErrored, kTimeout };
enum class FailureKind { kAssertion, kException, kTimeout };

std::string_view to_string(TestStatus s);
std::string_view to_string(FailureKind k);
TestStatus parse_test_status(std::string_view text);
FailureKind parse_failure_kind(std::string_view text);

/// Errored and timed-out tests count as failing.
inline bool is_failing(TestStatus s) { return s != TestStatus::kPassed; }

inline constexpr std::size_t kLocalValueCap = 120;

struct TraceEvent {
  std::string file;
  int line = 0;
  long seq = 0;
  std::map<std::string, std::string> locals;

  bool operator==(const TraceEvent&) const = default;
};

struct TestResult {
  std::string test_id;
  TestStatus status = TestStatus::kPassed;
  std::optional<FailureKind> failure_kind;
  std::string message;
  std::map<std::string, std::set<int>> covered_lines;
  std::optional<std::vector<TraceEvent>> trace;

  bool operator==(const TestResult&) const = default;
};

struct TargetLabel {
  enum class Kind { kReference, kSubmission, kMutant };
  Kind kind = Kind::kSubmission;
  std::string mutant_id;

  static TargetLabel reference() { return {Kind::kReference, {}}; }
  static TargetLabel submission() { return {Kind::kSubmission, {}}; }
  static TargetLabel mutant(std::string id) { return {Kind::kMutant, std::move(id)}; }
  static TargetLabel parse(std::string_view text);

  std::string str() const;
  bool operator==(const TargetLabel&) const = default;
};

struct TestRunReport {
  TargetLabel target;
  std::vector<TestResult> results;

  const TestResult* find(std::string_view test_id) const;
  std::size_t failing_count() const;

  bool operator==(const TestRunReport&) const = default;
};

inline constexpr const char* kRunSchema = "sidb.run.v1";
inline constexpr const char* kRunTestSchema = "sidb.run.v1.test";

json to_json(const TraceEvent& ev);
json to_json(const TestResult& r);
json to_json(const TestRunReport& r);

/// Parses and validates one per-test report. Throws E_ADAPTER_PROTOCOL on any
/// schema or invariant violation. Local values longer than 120 chars are cut.
TestResult test_result_from_json(const json& j, int trace_event_cap = 5000);
TestRunReport run_report_from_json(const json& j);

struct OutcomeChange {
  std::string test_id;
  TestStatus a;
  TestStatus b;

  bool operator==(const OutcomeChange&) const = default;
};
using OutcomeDiff = std::vector<OutcomeChange>;

/// Ordered by a's result order. Throws E_TEST_SET_MISMATCH.
OutcomeDiff diff_outcomes(const TestRunReport& a, const TestRunReport& b);

/// Executes tests through one adapter. Copyable and stateless between calls,
/// so a single Runner may serve concurrent sessions.
class Runner {
 public:
  Runner(std::string runtime, AdapterConfig cfg, std::filesystem::path base_dir = {});

  const std::string& runtime() const { return runtime_; }
  const AdapterConfig& config() const { return cfg_; }
  const std::filesystem::path& base_dir() const { return base_dir_; }

  /// Empty when the adapter can run; otherwise the reason it cannot.
  std::string unavailable_reason() const;

  TestRunReport run_tests(const SourceFile& source, std::span<const TestCase> tests,
                          const TargetLabel& label) const;
  TestResult run_one(const SourceFile& source, const TestCase& test) const;

  /// Replay file name for (source, test) relative to the report dir.
  static std::filesystem::path replay_key(const SourceFile& source, const TestCase& test);

 private:
  TestResult run_subprocess(const SourceFile& source, const TestCase& test) const;
  TestResult run_replay(const SourceFile& source, const TestCase& test) const;
  std::filesystem::path resolve(const std::string& p) const;
  void record(const SourceFile& source, const TestCase& test, const TestResult& result) const;

  std::string runtime_;
  AdapterConfig cfg_;
  std::filesystem::path base_dir_;
};

}  // namespace sidb
