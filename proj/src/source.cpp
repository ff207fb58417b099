#include "sidb/source.hpp"

#include <cstdio>

#include "sidb/error.hpp"

namespace sidb {

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      out.emplace_back(text.substr(start));
      break;
    }
    auto line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.emplace_back(line);
    start = nl + 1;
  }
  return out;
}

std::string trim(std::string_view text) {
  const char* ws = " \t\r\n";
  auto b = text.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = text.find_last_not_of(ws);
  return std::string(text.substr(b, e - b + 1));
}

std::size_t SourceFile::line_count() const { return split_lines(content).size(); }

std::vector<std::string> SourceFile::lines() const { return split_lines(content); }

std::string_view to_string(Visibility v) {
  return v == Visibility::kPublic ? "public" : "private";
}

std::string_view to_string(TestKind k) {
  return k == TestKind::kLecturer ? "lecturer" : "student_custom";
}

Visibility parse_visibility(std::string_view text) {
  if (text == "public") return Visibility::kPublic;
  if (text == "private") return Visibility::kPrivate;
  throw Error(ErrorCode::kInvalidArgument, "unknown visibility '" + std::string(text) + "'",
              "visibility");
}

TestKind parse_test_kind(std::string_view text) {
  if (text == "lecturer") return TestKind::kLecturer;
  if (text == "student_custom") return TestKind::kStudentCustom;
  throw Error(ErrorCode::kInvalidArgument, "unknown test kind '" + std::string(text) + "'",
              "kind");
}

std::string content_key(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sidb
