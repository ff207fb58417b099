#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "sidb/error.hpp"
#include "sidb/llm.hpp"
#include "sidb/prompts.hpp"
#include "sidb/source.hpp"
#include "test_support.hpp"

using namespace sidb;
using namespace sidb::testing;

TEST(Templates, FillKnownAndKeepUnknown) {
  EXPECT_EQ(fill_template("L{{level}}: {{x}} {{statement}}", {{"level", "3"}, {"statement", "avg"}}), "L3: {{x}} avg");
  EXPECT_EQ(fill_template("open {{level", {{"level", "1"}}), "open {{level");
  EXPECT_EQ(unknown_placeholders("{{level}} {{bogus}} {{forbidden}}"), std::vector<std::string>{"bogus"});
}

TEST(Templates, BuiltinUsesOnlyKnownPlaceholders) {
  auto t = PromptTemplates::builtin();
  EXPECT_TRUE(unknown_placeholders(t.system).empty());
  for (const auto& l : t.levels) {
    EXPECT_TRUE(unknown_placeholders(l).empty());
    EXPECT_NE(l.find("{{level}}"), std::string::npos);
  }
}

TEST(Templates, LoadOverridesPresentFilesOnly) {
  auto dir = std::filesystem::temp_directory_path() / ("sidb-prompts-" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "level2.txt") << "custom {{level}}";
  auto t = PromptTemplates::load(dir);
  EXPECT_EQ(t.levels[1], "custom {{level}}");
  EXPECT_EQ(t.levels[0], PromptTemplates::builtin().levels[0]);
  std::filesystem::remove_all(dir);
}

TEST(MockLlm, LookupOrder) {
  MockLlmClient mock(mock_llm_dir());
  PromptDocument p;
  p.bundle_id = "listing1";
  p.level = 3;
  auto plain = mock.complete(p, kDefaultLlmTimeout);
  EXPECT_NE(plain.find("Line 7 adds each grade"), std::string::npos);
  p.student_message = "why is this breakpoint here?";
  auto keyed = mock.complete(p, kDefaultLlmTimeout);
  EXPECT_NE(keyed, plain);
  p.student_message = "something unrecorded";
  EXPECT_EQ(mock.complete(p, kDefaultLlmTimeout), plain);
  p.bundle_id = "unknown";
  p.student_message.clear();
  EXPECT_EQ(mock.complete(p, kDefaultLlmTimeout), read_text(mock_llm_dir() / "default" / "level3.txt"));
  EXPECT_EQ(mock.backend(), "deterministic_mock");
  MockLlmClient empty("/nonexistent");
  EXPECT_NE(empty.complete(p, kDefaultLlmTimeout).find("level 3"), std::string::npos);
}

namespace {

class FakeEndpoint {
 public:
  explicit FakeEndpoint(int status) {
    server_.Post("/v1/chat/completions", [this, status](const httplib::Request& req, httplib::Response& res) {
      last_body = req.body;
      last_auth = req.get_header_value("Authorization");
      res.status = status;
      res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"look at line 7"}}]})",
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  std::string last_body, last_auth;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST(HttpLlm, SendsChatCompletionRequest) {
  FakeEndpoint ep(200);
  HttpLlmClient client(ep.url(), "k-123", "tiny");
  PromptDocument p;
  p.system_preamble = "sys";
  p.level_directive = "user";
  EXPECT_EQ(client.complete(p, std::chrono::milliseconds(2000)), "look at line 7");
  auto body = json::parse(ep.last_body);
  EXPECT_EQ(body["model"], "tiny");
  EXPECT_EQ(body["messages"][0]["content"], "sys");
  EXPECT_EQ(body["messages"][1]["role"], "user");
  EXPECT_EQ(ep.last_auth, "Bearer k-123");
}

TEST(HttpLlm, ServerErrorIsUnavailable) {
  FakeEndpoint ep(500);
  HttpLlmClient client(ep.url(), "", "");
  try {
    client.complete(PromptDocument{}, std::chrono::milliseconds(2000));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLlmUnavailable);
  }
}

TEST(HttpLlm, UnreachableIsUnavailable) {
  HttpLlmClient client("http://127.0.0.1:1", "", "");
  try {
    client.complete(PromptDocument{}, std::chrono::milliseconds(500));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLlmUnavailable);
  }
}

TEST(LlmEnv, MockWinsOverEndpoint) {
  ::setenv("SIDB_LLM_BASE_URL", "http://127.0.0.1:1", 1);
  ::setenv("SIDB_LLM_MOCK_DIR", mock_llm_dir().c_str(), 1);
  EXPECT_EQ(llm_client_from_env()->backend(), "deterministic_mock");
  ::unsetenv("SIDB_LLM_MOCK_DIR");
  EXPECT_EQ(llm_client_from_env()->backend(), "http_endpoint");
  ::unsetenv("SIDB_LLM_BASE_URL");
  EXPECT_EQ(llm_client_from_env(), nullptr);
}
