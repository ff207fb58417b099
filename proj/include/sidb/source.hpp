#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace sidb {

/// The single module under test. `path` is the module file name as the test
/// scripts import it (e.g. "solution.py"), never an absolute location.
struct SourceFile {
  std::string path;
  std::string content;
  std::set<int> executable_lines;  // filled from trace data after a run

  std::size_t line_count() const;
  std::vector<std::string> lines() const;

  bool operator==(const SourceFile&) const = default;
};

enum class Visibility { kPublic, kPrivate };
enum class TestKind { kLecturer, kStudentCustom };

std::string_view to_string(Visibility v);
std::string_view to_string(TestKind k);
Visibility parse_visibility(std::string_view text);
TestKind parse_test_kind(std::string_view text);

/// Machine-readable expectation: `input` is the argument list of the entry
/// point call, `output` the expected result, both in target-language literal
/// syntax ("[2, 2]" / "2.0").
struct ExpectedRecord {
  std::string input;
  std::string output;

  bool operator==(const ExpectedRecord&) const = default;
};

struct TestCase {
  std::string id;
  Visibility visibility = Visibility::kPublic;
  TestKind kind = TestKind::kLecturer;
  std::string payload;
  std::optional<ExpectedRecord> expected;
  std::string file;  // manifest-relative payload file, empty when inline

  bool operator==(const TestCase&) const = default;
};

/// 64-bit FNV-1a, hex encoded. Used to key replayed reports by content.
std::string content_key(std::string_view bytes);

std::vector<std::string> split_lines(std::string_view text);
std::string trim(std::string_view text);

}  // namespace sidb
