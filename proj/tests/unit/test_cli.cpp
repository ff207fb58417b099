#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <sys/wait.h>

#include "test_support.hpp"

using namespace sidb;
using namespace sidb::testing;

namespace {

struct Output {
  int exit_code;
  std::string text;
};

Output sidb_cli(const std::string& args) {
  std::string cmd = std::string(SIDB_CLI_PATH) + " " + args + " 2>&1";
  FILE* p = ::popen(cmd.c_str(), "r");
  if (p == nullptr) return {-1, {}};
  std::string out;
  std::array<char, 4096> buf{};
  while (auto n = std::fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
  int status = ::pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string b(const std::string& id) { return bundle_dir(id).string(); }

}  // namespace

TEST(Cli, ValidateBundle) {
  auto o = sidb_cli("validate-bundle " + b("listing1"));
  EXPECT_EQ(o.exit_code, 0) << o.text;
  auto bad = sidb_cli("validate-bundle /nonexistent");
  EXPECT_EQ(bad.exit_code, 2);
  EXPECT_NE(bad.text.find("error:"), std::string::npos);
}

TEST(Cli, RunReportsFailures) {
  auto buggy = sidb_cli("run " + b("listing1") + " " + b("listing1") + "/submissions/buggy");
  EXPECT_EQ(buggy.exit_code, 1) << buggy.text;
  auto ref = sidb_cli("run " + b("listing1") + " --on-reference");
  EXPECT_EQ(ref.exit_code, 0) << ref.text;
}

TEST(Cli, LocalizeJson) {
  auto o = sidb_cli("localize " + b("listing1") + " " + b("listing1") + "/submissions/buggy --format json -k 3");
  ASSERT_EQ(o.exit_code, 0) << o.text;
  auto j = json::parse(o.text);
  EXPECT_EQ(j["schema"], "sidb.scores.v1");
  EXPECT_EQ(j["ranked"][0]["line"], 7);
  EXPECT_EQ(j["ranked"].size(), 3u);
}

TEST(Cli, PlanEditorExport) {
  auto o = sidb_cli("plan-breakpoints " + b("listing1") + " " + b("listing1") +
                    "/submissions/buggy --max 2 --export editor");
  ASSERT_EQ(o.exit_code, 0) << o.text;
  auto j = json::parse(o.text);
  ASSERT_EQ(j["breakpoints"].size(), 2u);
  EXPECT_EQ(j["breakpoints"][0]["line"], 7);
  EXPECT_EQ(j["breakpoints"][1]["line"], 6);
}

TEST(Cli, AssessSuite) {
  auto o = sidb_cli("assess-suite " + b("listing1") + " --operators AOR,ROR,CRP --format json --verify");
  ASSERT_EQ(o.exit_code, 0) << o.text;
  auto j = json::parse(o.text);
  EXPECT_EQ(j["mutation_score"], 1.0);
  auto weak = sidb_cli("assess-suite " + b("listing1") + " --operators AOR,ROR,CRP --tests t2 --format json");
  ASSERT_EQ(weak.exit_code, 0) << weak.text;
  EXPECT_EQ(json::parse(weak.text)["verdict"], "weak");
}

TEST(Cli, CheckTests) {
  auto o = sidb_cli("check-tests " + b("listing1") + " " + b("listing1") + "/custom_tests.json --format json");
  ASSERT_EQ(o.exit_code, 0) << o.text;
  auto j = json::parse(o.text);
  EXPECT_EQ(j["entries"][1]["corrected_expected"], "2.0");
}

TEST(Cli, UnknownCommand) {
  auto o = sidb_cli("frobnicate");
  EXPECT_NE(o.exit_code, 0);
}
