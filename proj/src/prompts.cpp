#include "sidb/prompts.hpp"

#include <algorithm>

#include "fs_util.hpp"

namespace sidb {

PromptTemplates PromptTemplates::builtin() {
  PromptTemplates t;
  t.system =
      "You are a debugging tutor for a beginner programming course. You guide the student through "
      "debugging their own program with breakpoints and observations. You never write the corrected "
      "code for them.\n{{forbidden}}\n";
  t.levels[0] =
      "Hint level {{level}} of 6: explain the failing tests in plain words. Say what was expected, what "
      "happened instead and where execution stopped. Do not suggest a fix.\n\n"
      "Task:\n{{statement}}\n\nFailing tests:\n{{failing_tests}}\n\nStudent says: {{student_message}}\n";
  t.levels[1] =
      "Hint level {{level}} of 6: breakpoints were set automatically. Tell the student where they are and "
      "how to start the debugger on the failing test.\n\n"
      "Failing tests:\n{{failing_tests}}\n\nBreakpoints:\n{{breakpoints}}\n\nStudent says: {{student_message}}\n";
  t.levels[2] =
      "Hint level {{level}} of 6: explain why each breakpoint is interesting, using the coverage evidence "
      "below. Point at the variables worth watching.\n\n"
      "Suspicious lines:\n{{suspicious_lines}}\n\nBreakpoints:\n{{breakpoints}}\n\nStudent says: "
      "{{student_message}}\n";
  t.levels[3] =
      "Hint level {{level}} of 6: give one conceptual hint that moves the student closer to the cause "
      "without naming the fix. Ask them to compare observed and expected values.\n\n"
      "Task:\n{{statement}}\n\nFailing tests:\n{{failing_tests}}\n\nSuspicious lines:\n{{suspicious_lines}}\n\n"
      "Student says: {{student_message}}\n";
  t.levels[4] =
      "Hint level {{level}} of 6: partially reveal why the failing test fails: which value reaches which "
      "line and why that line cannot handle it. Still no code.\n\n"
      "Failing tests:\n{{failing_tests}}\n\nBreakpoints:\n{{breakpoints}}\n\nStudent says: {{student_message}}\n";
  t.levels[5] =
      "Hint level {{level}} of 6: describe the direction of a fix in words (which lines, which case must be "
      "handled). Never write the patch.\n\n"
      "Task:\n{{statement}}\n\nFailing tests:\n{{failing_tests}}\n\nBreakpoints:\n{{breakpoints}}\n\n"
      "Student says: {{student_message}}\n";
  return t;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
  auto t = builtin();
  auto read_if = [&](const char* name, std::string& into) {
    auto p = dir / name;
    if (std::filesystem::is_regular_file(p)) into = detail::read_file(p);
  };
  read_if("system.txt", t.system);
  for (int i = 0; i < 6; ++i) {
    auto name = "level" + std::to_string(i + 1) + ".txt";
    read_if(name.c_str(), t.levels[static_cast<std::size_t>(i)]);
  }
  return t;
}

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    auto open = tmpl.find("{{", i);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(i));
      break;
    }
    auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) {
      out.append(tmpl.substr(i));
      break;
    }
    out.append(tmpl.substr(i, open - i));
    std::string name(tmpl.substr(open + 2, close - open - 2));
    auto it = values.find(name);
    if (it != values.end()) {
      out += it->second;
    } else {
      out.append(tmpl.substr(open, close + 2 - open));
    }
    i = close + 2;
  }
  return out;
}

std::vector<std::string> unknown_placeholders(std::string_view tmpl) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while ((i = tmpl.find("{{", i)) != std::string_view::npos) {
    auto close = tmpl.find("}}", i + 2);
    if (close == std::string_view::npos) break;
    std::string name(tmpl.substr(i + 2, close - i - 2));
    if (std::find(kPromptPlaceholders.begin(), kPromptPlaceholders.end(), name) == kPromptPlaceholders.end()) {
      out.push_back(name);
    }
    i = close + 2;
  }
  return out;
}

}  // namespace sidb
