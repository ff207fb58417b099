#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace sidb {

/// Everything sent to a language model for one assistant turn. Never holds
/// reference-solution text.
struct PromptDocument {
  std::string bundle_id;
  int level = 1;
  std::string system_preamble;
  std::string task_statement;
  std::vector<std::string> failing_tests;
  std::vector<std::string> suspicious_lines;
  std::vector<std::string> breakpoints;
  std::string level_directive;  // the filled level template: the user message
  std::string student_message;
  std::string forbidden_directive;

  std::size_t size() const { return system_preamble.size() + level_directive.size(); }
  /// Both messages concatenated, for containment scans.
  std::string rendered() const { return system_preamble + "\n" + level_directive; }
};

inline constexpr std::chrono::milliseconds kDefaultLlmTimeout{30000};

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  /// Throws Error(E_LLM_UNAVAILABLE) when the backend fails or times out.
  virtual std::string complete(const PromptDocument& prompt, std::chrono::milliseconds timeout) = 0;
  virtual std::string backend() const = 0;
};

/// Canned replies from `<dir>/<bundle id>/level<N>-<message key>.txt`, then
/// `<dir>/<bundle id>/level<N>.txt`, then `<dir>/default/level<N>.txt`, then a
/// built-in line. A pure function of (bundle id, level, student message).
class MockLlmClient : public LlmClient {
 public:
  explicit MockLlmClient(std::filesystem::path fixtures_dir);
  std::string complete(const PromptDocument& prompt, std::chrono::milliseconds timeout) override;
  std::string backend() const override { return "deterministic_mock"; }

 private:
  std::filesystem::path dir_;
};

/// OpenAI-style chat-completions endpoint: POST <base_url>/chat/completions.
class HttpLlmClient : public LlmClient {
 public:
  HttpLlmClient(std::string base_url, std::string api_key, std::string model);
  std::string complete(const PromptDocument& prompt, std::chrono::milliseconds timeout) override;
  std::string backend() const override { return "http_endpoint"; }

 private:
  std::string origin_;
  std::string path_prefix_;
  std::string api_key_;
  std::string model_;
};

/// SIDB_LLM_MOCK_DIR wins over SIDB_LLM_BASE_URL; null when neither is set.
std::shared_ptr<LlmClient> llm_client_from_env();

}  // namespace sidb
