#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sidb/bundle.hpp"
#include "sidb/runner.hpp"

namespace sidb {

enum class CustomVerdict { kAccepted, kFlaggedCorrected, kFlaggedInvalid };

std::string_view to_string(CustomVerdict v);

struct CustomTestEntry {
  std::string test_id;
  CustomVerdict verdict = CustomVerdict::kAccepted;
  TestStatus reference_status = TestStatus::kPassed;
  std::optional<std::string> observed_expected;
  std::optional<std::string> corrected_expected;
  std::string note;
};

struct CustomTestReport {
  std::vector<CustomTestEntry> entries;
};

/// Script checking `entry_point(input) == expected` for a structured test.
std::string render_check_script(const AssignmentBundle& bundle, const ExpectedRecord& rec);
/// Script reporting repr(entry_point(input)) through the failure message.
std::string render_capture_script(const AssignmentBundle& bundle, const ExpectedRecord& rec);
/// Extracts the captured repr from a capture run's message, if present.
std::optional<std::string> captured_output(const std::string& message);

/// Runs each custom test against the reference. Structured tests whose
/// assertion fails are corrected from the reference's captured output;
/// reference errors/timeouts flag the test invalid. Free-form tests can only
/// be flagged.
CustomTestReport validate_custom_tests(const AssignmentBundle& bundle, std::span<const TestCase> custom,
                                       const Runner& runner);

/// The test with its expectation replaced by the suggested correction.
TestCase apply_correction(const TestCase& test, const CustomTestEntry& entry);

json to_json(const CustomTestReport& r);
std::string format_table(const CustomTestReport& r);

}  // namespace sidb
