#include <gtest/gtest.h>

#include <thread>

#include "sidb/error.hpp"
#include "sidb/service.hpp"
#include "test_support.hpp"

using namespace sidb;
using namespace sidb::testing;
namespace fs = std::filesystem;

namespace {

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    store_dir_ = fs::temp_directory_path() / ("sidb-store-" + std::to_string(::getpid()) + "-" +
                                              ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(store_dir_);
    service_ = make_service();
  }
  void TearDown() override { fs::remove_all(store_dir_); }

  std::unique_ptr<Service> make_service(DialogueMode mode = DialogueMode::kInteractiveGuidance) {
    ServiceOptions opts;
    opts.default_mode = mode;
    opts.max_breakpoints = 2;
    opts.clock = [] { return std::string("2024-01-01T00:00:00Z"); };
    return std::make_unique<Service>(BundleRegistry::load_dir(fixtures_dir() / "bundles"), SessionStore(store_dir_),
                                     std::make_shared<MockLlmClient>(mock_llm_dir()), PromptTemplates::builtin(), opts);
  }

  Submission submission(const std::string& bundle, const std::string& which) {
    auto b = service_->bundles().find(bundle);
    return load_submission(bundle_dir(bundle) / "submissions" / which, *b);
  }

  static ErrorCode code_of(const std::function<void()>& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    ADD_FAILURE() << "no error";
    return ErrorCode::kIo;
  }

  fs::path store_dir_;
  std::unique_ptr<Service> service_;
};

}  // namespace

TEST_F(ServiceTest, RegistryLoadsTheCorpus) {
  EXPECT_EQ(service_->bundles().ids(), (std::vector<std::string>{"listing1", "longest_ones", "max_operations"}));
  EXPECT_EQ(code_of([&] { service_->bundles().find("nope"); }), ErrorCode::kBundleNotFound);
  EXPECT_TRUE(service_->validate_bundle("max_operations").valid);
}

TEST_F(ServiceTest, SessionLifecycle) {
  auto s = service_->create_session("listing1", submission("listing1", "buggy"));
  EXPECT_EQ(s.session_id.size(), 32u);
  EXPECT_EQ(s.dialogue.level, 0);
  EXPECT_EQ(code_of([&] { service_->plan(s.session_id); }), ErrorCode::kMissingContext);

  auto ran = service_->run_and_localize(s.session_id);
  EXPECT_EQ(ran.dialogue.level, 1);
  ASSERT_TRUE(ran.artifacts.plan);
  auto plan = service_->plan(s.session_id);
  ASSERT_EQ(plan.breakpoints.size(), 2u);
  EXPECT_EQ(plan.breakpoints[0].line, 7);
  EXPECT_EQ(plan.breakpoints[1].line, 6);
  EXPECT_FALSE(service_->trace(s.session_id, "t4").empty());

  EXPECT_EQ(service_->next_hint(s.session_id).level, 2);
  auto chat = service_->chat(s.session_id, "why is this breakpoint here?");
  EXPECT_EQ(chat.kind, TurnKind::kChat);

  auto updated = service_->update_submission(s.session_id, submission("listing1", "fixed").source.content);
  EXPECT_FALSE(updated.artifacts.report);
  EXPECT_EQ(updated.dialogue.level, 2);
  auto done = service_->run_and_localize(s.session_id);
  EXPECT_TRUE(done.dialogue.solved);
  EXPECT_EQ(done.dialogue.transcript.back().text.rfind("All tests pass now.", 0), 0u);
  EXPECT_EQ(code_of([&] { service_->next_hint(s.session_id); }), ErrorCode::kSessionSolved);
  EXPECT_EQ(code_of([&] { service_->run_and_localize(s.session_id); }), ErrorCode::kSessionSolved);
}

TEST_F(ServiceTest, SessionsPersistAcrossInstances) {
  auto s = service_->create_session("max_operations", submission("max_operations", "buggy"));
  service_->run_and_localize(s.session_id);
  service_->next_hint(s.session_id);
  auto before = service_->get(s.session_id);
  auto other = make_service();
  auto after = other->get(s.session_id);
  EXPECT_EQ(after, before);
  EXPECT_EQ(after.artifacts.spectrum, before.artifacts.spectrum);
  EXPECT_EQ(code_of([&] { other->get("0123456789abcdef0123456789abcdef"); }), ErrorCode::kSessionNotFound);
  EXPECT_EQ(code_of([&] { other->get("../etc/passwd"); }), ErrorCode::kSessionNotFound);
}

TEST_F(ServiceTest, CorpusPlansStayInTheFaultyLoop) {
  auto s = service_->create_session("max_operations", submission("max_operations", "buggy"));
  service_->run_and_localize(s.session_id);
  auto plan = service_->plan(s.session_id);
  EXPECT_EQ(plan.breakpoints[0].line, 15);
}

TEST_F(ServiceTest, PrivateTestsAreWithheld) {
  auto s = service_->create_session("longest_ones", submission("longest_ones", "buggy"));
  auto ran = service_->run_and_localize(s.session_id);
  EXPECT_EQ(code_of([&] { service_->trace(s.session_id, "t6"); }), ErrorCode::kPrivateTest);
  EXPECT_EQ(code_of([&] { service_->trace(s.session_id, "t99"); }), ErrorCode::kInvalidArgument);
  auto v = service_->view(ran);
  EXPECT_FALSE(v.contains("schema"));
  EXPECT_EQ(v["mode"], "interactive_guidance");
  bool saw_private = false;
  for (const auto& r : v["artifacts"]["report"]["results"]) {
    if (r["test_id"] == "t6") {
      saw_private = true;
      EXPECT_FALSE(r.contains("trace"));
      EXPECT_TRUE(r["covered_lines"].empty());
    }
  }
  EXPECT_TRUE(saw_private);
  EXPECT_EQ(v["tests"][5]["visibility"], "private");
  EXPECT_EQ(v["tests"][5]["status"], "errored");
}

TEST_F(ServiceTest, GenerateModeRejectsChat) {
  auto svc = make_service(DialogueMode::kGenerateHints);
  auto s = svc->create_session("listing1", submission("listing1", "buggy"));
  EXPECT_EQ(code_of([&] { svc->chat(s.session_id, "hi"); }), ErrorCode::kWrongMode);
  auto forced = svc->create_session("listing1", submission("listing1", "buggy"), DialogueMode::kInteractiveGuidance);
  EXPECT_EQ(forced.dialogue.mode, DialogueMode::kInteractiveGuidance);
}

TEST_F(ServiceTest, HintBeforeRunIsANotice) {
  auto s = service_->create_session("listing1", submission("listing1", "buggy"));
  auto turn = service_->next_hint(s.session_id);
  EXPECT_EQ(turn.kind, TurnKind::kNotice);
  EXPECT_EQ(turn.level, 0);
}

TEST_F(ServiceTest, AssessAndCustomTests) {
  auto a = service_->assess_suite("listing1", {MutationOperator::kAOR, MutationOperator::kROR, MutationOperator::kCRP},
                                  std::nullopt, 0, kDefaultStrengthThreshold);
  EXPECT_EQ(a["mutation_score"], 1.0);
  EXPECT_EQ(a["verdict"], "strong");

  auto s = service_->create_session("listing1", submission("listing1", "buggy"));
  std::vector<TestCase> tests = {custom_test_from_json(json{{"id", "c2"}, {"input", "[2, 2]"}, {"expected", "3.0"}})};
  auto report = service_->check_custom_tests(s.session_id, tests);
  EXPECT_EQ(report.entries[0].verdict, CustomVerdict::kFlaggedCorrected);
}

TEST_F(ServiceTest, ConcurrentHintsSerialize) {
  auto s = service_->create_session("listing1", submission("listing1", "buggy"));
  service_->run_and_localize(s.session_id);
  std::vector<std::thread> threads;
  for (int i = 0; i < 4; ++i) threads.emplace_back([&] { service_->next_hint(s.session_id); });
  for (auto& t : threads) t.join();
  auto after = service_->get(s.session_id);
  EXPECT_EQ(after.dialogue.level, 5);
  EXPECT_EQ(after.dialogue.transcript.size(), 5u);
}

TEST_F(ServiceTest, SubmissionPathMustMatch) {
  auto sub = submission("listing1", "buggy");
  sub.source.path = "other.py";
  EXPECT_EQ(code_of([&] { service_->create_session("listing1", sub); }), ErrorCode::kSubmissionMismatch);
}
