#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sidb/runner.hpp"
#include "sidb/source.hpp"

namespace sidb {

inline constexpr const char* kBundleSchema = "sidb.bundle.v1";
inline constexpr std::size_t kStatementCap = 64 * 1024;

/// Lecturer task package. Immutable after load; share freely across sessions.
struct AssignmentBundle {
  std::string id;
  std::string title;
  std::string statement;
  std::string target_runtime;
  std::string entry_point;  // function exercised by structured tests, optional
  SourceFile reference_source;
  std::vector<TestCase> tests;
  AdapterConfig runner;

  // Manifest-relative file names, kept so the bundle can be written back.
  std::string statement_file;
  std::string reference_file;
  std::string runner_config_file;

  std::filesystem::path root;  // where it was loaded from; not part of value equality

  const TestCase* find_test(std::string_view test_id) const;
  Runner make_runner() const { return Runner(target_runtime, runner, root); }

  /// Throws E_MANIFEST_MALFORMED on a broken invariant.
  void check() const;

  bool operator==(const AssignmentBundle& o) const;
};

struct Submission {
  std::string student_id;
  SourceFile source;
  std::vector<TestCase> custom_tests;

  bool operator==(const Submission&) const = default;
};

enum class Severity { kInfo, kWarning, kError };

struct ValidationIssue {
  std::string code;
  Severity severity = Severity::kError;
  std::string message;
  std::string location;
};

struct ValidationReport {
  bool valid = true;
  std::vector<ValidationIssue> issues;
  std::map<std::string, TestStatus> test_status;  // per lecturer test, on the reference
};

AssignmentBundle load_bundle(const std::filesystem::path& root);
/// Writes manifest, statement, reference, test payloads and runner config.
void save_bundle(const AssignmentBundle& bundle, const std::filesystem::path& root);
json manifest_json(const AssignmentBundle& bundle);

/// Runs the whole suite against the reference; every non-passing test is an
/// error-severity REFERENCE_FAILS_TEST issue.
ValidationReport validate_bundle(const AssignmentBundle& bundle, const Runner& runner);

/// Custom test records: {"id","input","expected"} (structured) or
/// {"id","payload"} / {"id","file"} (free-form, file relative to `base`).
TestCase custom_test_from_json(const json& j, const std::filesystem::path& base = {});
json to_json(const TestCase& t);

/// `path` is either a submission directory holding submission.json or a bare
/// source file. The source is renamed to the bundle's module name.
Submission load_submission(const std::filesystem::path& path, const AssignmentBundle& bundle);
Submission make_submission(std::string student_id, std::string content,
                           const AssignmentBundle& bundle);
json to_json(const Submission& s);
Submission submission_from_json(const json& j, const AssignmentBundle& bundle);

json to_json(const ValidationReport& r);

}  // namespace sidb
