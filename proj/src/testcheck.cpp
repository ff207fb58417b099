#include "sidb/testcheck.hpp"

#include <filesystem>
#include <iomanip>
#include <sstream>

#include "sidb/error.hpp"

namespace sidb {

namespace {

constexpr std::string_view kCaptureMarker = "__sidb_capture__=";

std::string module_name(const AssignmentBundle& bundle) {
  return std::filesystem::path(bundle.reference_source.path).stem().string();
}

void require_python(const AssignmentBundle& bundle) {
  if (bundle.target_runtime != "python3") {
    throw Error(ErrorCode::kRunnerUnavailable, "no custom-test template for runtime " + bundle.target_runtime,
                bundle.target_runtime);
  }
  if (bundle.entry_point.empty()) {
    throw Error(ErrorCode::kExpectedUnstructured, "bundle " + bundle.id + " declares no entry_point", "entry_point");
  }
}

TestCase rendered(const TestCase& t, std::string payload) {
  TestCase out = t;
  out.payload = std::move(payload);
  return out;
}

}  // namespace

std::string_view to_string(CustomVerdict v) {
  switch (v) {
    case CustomVerdict::kAccepted: return "accepted";
    case CustomVerdict::kFlaggedCorrected: return "flagged_corrected";
    case CustomVerdict::kFlaggedInvalid: return "flagged_invalid";
  }
  return "flagged_invalid";
}

std::string render_check_script(const AssignmentBundle& bundle, const ExpectedRecord& rec) {
  require_python(bundle);
  std::ostringstream s;
  s << "from " << module_name(bundle) << " import " << bundle.entry_point << " as _sidb_entry\n"
    << "_sidb_result = _sidb_entry(" << rec.input << ")\n"
    << "_sidb_expected = " << rec.output << "\n"
    << "assert _sidb_result == _sidb_expected, "
       "\"expected \" + repr(_sidb_expected) + \", got \" + repr(_sidb_result)\n";
  return s.str();
}

std::string render_capture_script(const AssignmentBundle& bundle, const ExpectedRecord& rec) {
  require_python(bundle);
  std::ostringstream s;
  s << "from " << module_name(bundle) << " import " << bundle.entry_point << " as _sidb_entry\n"
    << "_sidb_result = _sidb_entry(" << rec.input << ")\n"
    << "raise AssertionError(\"" << kCaptureMarker << "\" + repr(_sidb_result))\n";
  return s.str();
}

std::optional<std::string> captured_output(const std::string& message) {
  auto pos = message.find(kCaptureMarker);
  if (pos == std::string::npos) return std::nullopt;
  return message.substr(pos + kCaptureMarker.size());
}

CustomTestReport validate_custom_tests(const AssignmentBundle& bundle, std::span<const TestCase> custom,
                                       const Runner& runner) {
  if (custom.empty()) throw Error(ErrorCode::kInvalidArgument, "no custom tests given", "tests");
  CustomTestReport report;
  for (const auto& t : custom) {
    CustomTestEntry e;
    e.test_id = t.id;
    if (!t.expected) {
      auto r = runner.run_one(bundle.reference_source, t);
      e.reference_status = r.status;
      if (r.status == TestStatus::kPassed) {
        e.verdict = CustomVerdict::kAccepted;
      } else {
        e.verdict = CustomVerdict::kFlaggedInvalid;
        e.note = "E_EXPECTED_UNSTRUCTURED: free-form test fails on the reference (" + r.message +
                 "); only structured tests can be corrected";
      }
      report.entries.push_back(std::move(e));
      continue;
    }

    e.observed_expected = t.expected->output;
    auto r = runner.run_one(bundle.reference_source, rendered(t, render_check_script(bundle, *t.expected)));
    e.reference_status = r.status;
    if (r.status == TestStatus::kPassed) {
      e.verdict = CustomVerdict::kAccepted;
    } else if (r.status == TestStatus::kFailed && r.failure_kind == FailureKind::kAssertion) {
      auto cap = runner.run_one(bundle.reference_source, rendered(t, render_capture_script(bundle, *t.expected)));
      auto out = captured_output(cap.message);
      if (out) {
        e.verdict = CustomVerdict::kFlaggedCorrected;
        e.corrected_expected = *out;
        e.note = "the reference returns " + *out + " for this input";
      } else {
        e.verdict = CustomVerdict::kFlaggedInvalid;
        e.note = "reference output could not be captured: " + cap.message;
      }
    } else {
      e.verdict = CustomVerdict::kFlaggedInvalid;
      e.note = "the reference implementation " +
               std::string(r.status == TestStatus::kTimeout ? "timed out" : "raised an error") +
               " on this input (" + r.message + "); the input is likely outside the task's domain";
    }
    report.entries.push_back(std::move(e));
  }
  return report;
}

TestCase apply_correction(const TestCase& test, const CustomTestEntry& entry) {
  TestCase out = test;
  if (entry.corrected_expected && out.expected) out.expected->output = *entry.corrected_expected;
  return out;
}

json to_json(const CustomTestReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    json j{{"test_id", e.test_id},
           {"verdict", to_string(e.verdict)},
           {"reference_status", to_string(e.reference_status)},
           {"note", e.note}};
    if (e.observed_expected) j["observed_expected"] = *e.observed_expected;
    if (e.corrected_expected) j["corrected_expected"] = *e.corrected_expected;
    entries.push_back(std::move(j));
  }
  return json{{"schema", "sidb.testcheck.v1"}, {"entries", entries}};
}

std::string format_table(const CustomTestReport& r) {
  std::ostringstream out;
  out << "test        verdict            reference  note\n";
  for (const auto& e : r.entries) {
    out << std::left << std::setw(12) << e.test_id << std::setw(19) << to_string(e.verdict) << std::setw(11)
        << to_string(e.reference_status) << e.note << "\n";
  }
  return out.str();
}

}  // namespace sidb
