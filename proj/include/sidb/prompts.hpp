#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace sidb {

/// Placeholders recognised in prompt templates, written as {{name}}:
///   statement          task statement excerpt
///   failing_tests      one summary line per failing test
///   suspicious_lines   top-ranked lines with scores and ef/ep counts
///   breakpoints        planned breakpoints with watch variables
///   student_message    the student's chat text (interactive mode)
///   level              current hint level, 1..6
///   forbidden          the no-full-solution directive (system.txt only)
inline constexpr std::array<std::string_view, 7> kPromptPlaceholders = {
    "statement", "failing_tests", "suspicious_lines", "breakpoints", "student_message", "level", "forbidden"};

struct PromptTemplates {
  std::string system;
  std::array<std::string, 6> levels;  // levels[0] is level 1

  static PromptTemplates builtin();
  /// Reads system.txt and level1.txt .. level6.txt; absent files keep the
  /// built-in text.
  static PromptTemplates load(const std::filesystem::path& dir);
};

/// Substitutes {{name}} occurrences; unknown names are left untouched.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values);
/// Placeholder names used in `tmpl` that are not in kPromptPlaceholders.
std::vector<std::string> unknown_placeholders(std::string_view tmpl);

}  // namespace sidb
