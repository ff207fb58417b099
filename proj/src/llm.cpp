#include "sidb/llm.hpp"

#include <cstdlib>

#include "httplib.h"
#include "json.hpp"

#include "fs_util.hpp"
#include "sidb/error.hpp"
#include "sidb/source.hpp"

namespace sidb {

namespace fs = std::filesystem;
using json = nlohmann::json;

MockLlmClient::MockLlmClient(fs::path fixtures_dir) : dir_(std::move(fixtures_dir)) {}

std::string MockLlmClient::complete(const PromptDocument& prompt, std::chrono::milliseconds) {
  auto level = "level" + std::to_string(prompt.level);
  std::vector<fs::path> candidates;
  if (!prompt.student_message.empty()) {
    candidates.push_back(dir_ / prompt.bundle_id / (level + "-" + content_key(prompt.student_message) + ".txt"));
  }
  candidates.push_back(dir_ / prompt.bundle_id / (level + ".txt"));
  candidates.push_back(dir_ / "default" / (level + ".txt"));
  for (const auto& p : candidates) {
    if (fs::is_regular_file(p)) return detail::read_file(p);
  }
  return "Take a closer look at the breakpoints and the values you observe there. (mock guidance, level " +
         std::to_string(prompt.level) + ")";
}

HttpLlmClient::HttpLlmClient(std::string base_url, std::string api_key, std::string model)
    : api_key_(std::move(api_key)), model_(std::move(model)) {
  auto scheme = base_url.find("://");
  auto path_start = base_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_start == std::string::npos) {
    origin_ = base_url;
  } else {
    origin_ = base_url.substr(0, path_start);
    path_prefix_ = base_url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  }
  if (model_.empty()) model_ = "gpt-3.5-turbo";
}

std::string HttpLlmClient::complete(const PromptDocument& prompt, std::chrono::milliseconds timeout) {
  httplib::Client cli(origin_);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  json body{{"model", model_},
            {"temperature", 0},
            {"messages",
             json::array({json{{"role", "system"}, {"content", prompt.system_preamble}},
                          json{{"role", "user"}, {"content", prompt.level_directive}}})}};
  auto res = cli.Post(path_prefix_ + "/chat/completions", headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::kLlmUnavailable, "chat endpoint unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kLlmUnavailable, "chat endpoint answered HTTP " + std::to_string(res->status));
  }
  try {
    auto j = json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kLlmUnavailable, std::string("unexpected chat response: ") + e.what());
  }
}

std::shared_ptr<LlmClient> llm_client_from_env() {
  auto env = [](const char* name) {
    const char* v = std::getenv(name);
    return v == nullptr ? std::string() : std::string(v);
  };
  if (auto mock = env("SIDB_LLM_MOCK_DIR"); !mock.empty()) return std::make_shared<MockLlmClient>(mock);
  if (auto base = env("SIDB_LLM_BASE_URL"); !base.empty()) {
    return std::make_shared<HttpLlmClient>(base, env("SIDB_LLM_API_KEY"), env("SIDB_LLM_MODEL"));
  }
  return nullptr;
}

}  // namespace sidb
