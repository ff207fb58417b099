// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Everything runs offline against replayed reports and the mock
// assistant; the live tracer is used additionally when python3 is present.

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "httplib.h"
#include "sidb/error.hpp"
#include "sidb/lexer.hpp"
#include "sidb/service.hpp"
#include "test_support.hpp"

extern char** environ;

using namespace sidb;
using namespace sidb::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

// Collects failed checks without aborting the criterion.
class Checks {
 public:
  void expect(bool cond, const std::string& what) {
    if (!cond && failures_.size() < 5) failures_.push_back(what);
    if (!cond) ++failed_;
  }
  Outcome outcome(std::string ok_detail) const {
    if (failed_ == 0) return {true, std::move(ok_detail)};
    std::string d = std::to_string(failed_) + " check(s) failed: ";
    for (std::size_t i = 0; i < failures_.size(); ++i) d += (i ? "; " : "") + failures_[i];
    return {false, d};
  }

 private:
  std::vector<std::string> failures_;
  std::size_t failed_ = 0;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 2) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(prec);
  s << v;
  return s.str();
}

fs::path temp_dir(const std::string& tag) {
  auto d = fs::temp_directory_path() / ("sidb-accept-" + tag + "-" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::set<int> region_of(const std::string& bundle) {
  std::ifstream in(bundle_dir(bundle) / "fault_region.json");
  auto j = json::parse(in);
  return j.at("lines").get<std::set<int>>();
}

const std::vector<Formula> kFormulas = {Formula::kOchiai, Formula::kTarantula, Formula::kDStar2, Formula::kOp2};

double naive(Formula f, NaiveCounts c) {
  switch (f) {
    case Formula::kOchiai: return naive_ochiai(c);
    case Formula::kTarantula: return naive_tarantula(c);
    case Formula::kDStar2: return naive_dstar2(c);
    case Formula::kOp2: return naive_op2(c);
  }
  return -1;
}

bool close(double a, double b) {
  if (a == kMaxScore || b == kMaxScore) return a == b;
  return std::abs(a - b) <= 1e-12;
}

Outcome sbfl_oracle() {
  auto t0 = Clock::now();
  Checks c;
  std::mt19937_64 rng(20240501);
  std::size_t compared = 0, mono_pairs = 0;
  for (int iter = 0; iter < 500; ++iter) {
    auto spec = build_spectrum(random_report(rng, 10, 30));
    const int F = spec.failing, P = spec.passing;
    for (const auto& [where, lc] : spec.lines) {
      NaiveCounts n{double(lc.ef), double(lc.ep), double(F - lc.ef), double(P - lc.ep)};
      for (auto f : kFormulas) {
        double got = score_line(f, lc.ef, lc.ep, F, P);
        c.expect(close(got, naive(f, n)), std::string(to_string(f)) + " differs at line " +
                                              std::to_string(where.line) + " of spectrum " + std::to_string(iter));
        ++compared;
      }
    }
    // Monotonicity: with ep, F, P fixed, more failing coverage never lowers a score.
    for (int ep = 0; ep <= P; ++ep) {
      for (int ef = 0; ef < F; ++ef) {
        for (auto f : kFormulas) {
          c.expect(score_line(f, ef, ep, F, P) <= score_line(f, ef + 1, ep, F, P),
                   std::string(to_string(f)) + " not monotone in ef at ef=" + std::to_string(ef));
          ++mono_pairs;
        }
      }
    }
  }
  double secs = seconds_since(t0);
  c.expect(secs < 5.0, "runtime " + fmt(secs) + " s >= 5 s");
  return c.outcome(std::to_string(compared) + " scores, " + std::to_string(mono_pairs) + " ef pairs, " + fmt(secs) +
                   " s");
}

// Ranking and plan for one runner; returns a description of what was found.
void listing_scenario(const AssignmentBundle& b, const Runner& runner, const std::string& label, Checks& c) {
  auto sub = load_submission(bundle_dir("listing1") / "submissions" / "buggy", b);
  auto report = runner.run_tests(sub.source, b.tests, TargetLabel::submission());
  c.expect(report.results.size() == 4 && report.failing_count() == 1, label + ": expected 3 passing + 1 failing");
  const auto* t4 = report.find("t4");
  c.expect(t4 != nullptr && t4->status == TestStatus::kErrored, label + ": t4 should error");
  if (t4 == nullptr) return;
  auto spectrum = build_spectrum(report);
  auto ranked = rank(suspiciousness(spectrum, Formula::kOchiai), t4->trace, 10);
  c.expect(!ranked.lines.empty() && ranked.lines[0].where.line == 7 && ranked.lines[0].rank == 1,
           label + ": line 7 not at position 1");
  auto plan = plan_breakpoints(ranked, spectrum, *t4, 2);
  std::set<int> lines;
  for (const auto& bp : plan.breakpoints) lines.insert(bp.line);
  c.expect(plan.breakpoints.size() == 2 && lines == std::set<int>{6, 7}, label + ": plan is not {7, 6}");
}

Outcome listing_golden() {
  Checks c;
  auto b = load_bundle(bundle_dir("listing1"));
  auto t0 = Clock::now();
  listing_scenario(b, b.make_runner(), "replay", c);
  double replay_secs = seconds_since(t0);
  std::string live = "live tracer unavailable (python3 missing)";
  if (python_available()) {
    auto t1 = Clock::now();
    listing_scenario(b, live_runner(b), "live", c);
    double secs = seconds_since(t1);
    c.expect(secs < 10.0, "live runtime " + fmt(secs) + " s >= 10 s");
    live = "live " + fmt(secs) + " s";
  }
  return c.outcome("line 7 ranked first, plan {7, 6}; replay " + fmt(replay_secs) + " s, " + live);
}

std::unique_ptr<Service> make_service(const fs::path& store, DialogueMode mode, std::size_t max_breakpoints) {
  ServiceOptions opts;
  opts.default_mode = mode;
  opts.max_breakpoints = max_breakpoints;
  opts.clock = [] { return std::string("2024-01-01T00:00:00Z"); };
  return std::make_unique<Service>(BundleRegistry::load_dir(fixtures_dir() / "bundles"), SessionStore(store),
                                   std::make_shared<MockLlmClient>(mock_llm_dir()), PromptTemplates::builtin(), opts);
}

Outcome corpus() {
  Checks c;
  auto store = temp_dir("corpus");
  auto service = make_service(store, DialogueMode::kGenerateHints, 2);
  std::string detail;
  for (std::string id : {"max_operations", "longest_ones"}) {
    auto bundle = service->bundles().find(id);
    c.expect(bundle->tests.size() >= 4, id + ": fewer than 4 tests");
    auto region = region_of(id);
    auto buggy = load_submission(bundle_dir(id) / "submissions" / "buggy", *bundle);
    auto fixed = load_submission(bundle_dir(id) / "submissions" / "fixed", *bundle);

    // The annotation must cover exactly where buggy and fixed differ.
    auto bl = buggy.source.lines(), fl = fixed.source.lines();
    c.expect(bl.size() == fl.size(), id + ": buggy/fixed line counts differ");
    for (std::size_t i = 0; i < std::min(bl.size(), fl.size()); ++i) {
      if (bl[i] != fl[i]) c.expect(region.count(static_cast<int>(i + 1)) > 0, id + ": edit outside region");
    }

    auto s = service->create_session(id, buggy);
    auto ran = service->run_and_localize(s.session_id);
    c.expect(ran.artifacts.report && ran.artifacts.report->failing_count() > 0, id + ": buggy version passes");
    c.expect(ran.artifacts.plan && !ran.artifacts.plan->breakpoints.empty(), id + ": empty plan");
    std::string lines;
    if (ran.artifacts.plan) {
      for (const auto& bp : ran.artifacts.plan->breakpoints) {
        c.expect(region.count(bp.line) > 0, id + ": breakpoint line " + std::to_string(bp.line) + " outside region");
        lines += (lines.empty() ? "" : ",") + std::to_string(bp.line);
      }
    }
    service->update_submission(s.session_id, fixed.source.content);
    auto done = service->run_and_localize(s.session_id);
    c.expect(done.dialogue.solved, id + ": fixed version did not reach solved");
    detail += (detail.empty() ? "" : "; ") + id + " plan {" + lines + "}";
  }
  fs::remove_all(store);
  return c.outcome(detail + "; both fixed versions solved");
}

Outcome mutation() {
  Checks c;
  auto t0 = Clock::now();
  auto b = load_bundle(bundle_dir("listing1"));
  auto runner = b.make_runner();
  std::vector<MutationOperator> ops = {MutationOperator::kAOR, MutationOperator::kROR, MutationOperator::kCRP};
  auto mutants = generate_mutants(b.reference_source, ops);
  c.expect(!mutants.empty(), "no mutants");
  auto full = assess_suite(b, mutants, runner);
  c.expect(full.mutation_score == 1.0 && full.strong, "full suite not strong at 1.0");
  auto witness = verify_kills(full, mutants, b, runner);
  c.expect(witness.empty(), "kill not reproduced: " + (witness.empty() ? "" : witness.front()));

  auto weak_bundle = b;
  weak_bundle.tests = {*b.find_test("t2")};
  auto weak = assess_suite(weak_bundle, mutants, runner);
  c.expect(weak.mutation_score < full.mutation_score, "one-assertion suite not weaker");
  c.expect(!weak.strong && weak.threshold == 0.8, "one-assertion suite not weak at 0.8");
  c.expect(verify_kills(weak, mutants, weak_bundle, runner).empty(), "weak-suite kill not reproduced");
  double secs = seconds_since(t0);
  c.expect(secs < 30.0, "runtime " + fmt(secs) + " s >= 30 s");
  return c.outcome(std::to_string(mutants.size()) + " mutants; full " + fmt(full.mutation_score) + " strong, t2-only " +
                   fmt(weak.mutation_score) + " weak; all kills witnessed; " + fmt(secs) + " s");
}

Outcome custom_tests() {
  Checks c;
  auto b = load_bundle(bundle_dir("listing1"));
  auto runner = b.make_runner();
  std::vector<TestCase> tests = {custom_test_from_json(json{{"id", "c2"}, {"input", "[2, 2]"}, {"expected", "3.0"}})};
  auto report = validate_custom_tests(b, tests, runner);
  const auto& e = report.entries.at(0);
  c.expect(e.verdict == CustomVerdict::kFlaggedCorrected, "not flagged_corrected");
  // The reference output for [2, 2], read independently from the plain reference run.
  auto ref_capture = runner.run_one(b.reference_source, [&] {
    auto t = tests[0];
    t.payload = render_capture_script(b, *t.expected);
    return t;
  }());
  auto ref_out = captured_output(ref_capture.message);
  c.expect(ref_out.has_value() && e.corrected_expected == ref_out, "correction differs from reference output");
  c.expect(e.corrected_expected == std::optional<std::string>("2.0"), "correction is not 2.0");
  auto corrected = apply_correction(tests[0], e);
  auto again = validate_custom_tests(b, std::vector<TestCase>{corrected}, runner);
  c.expect(again.entries.at(0).verdict == CustomVerdict::kAccepted, "corrected test not accepted");
  return c.outcome("3.0 corrected to " + e.corrected_expected.value_or("?") + ", corrected test accepted");
}

struct DialogueContext {
  AssignmentBundle bundle;
  Submission submission;
  TestRunReport report;
  CoverageSpectrum spectrum;
  RankedLines ranked;
  BreakpointPlan plan;
  std::vector<std::string> reference_only;  // normalized

  explicit DialogueContext(const std::string& id) {
    bundle = load_bundle(bundle_dir(id));
    submission = load_submission(bundle_dir(id) / "submissions" / "buggy", bundle);
    report = bundle.make_runner().run_tests(submission.source, bundle.tests, TargetLabel::submission());
    spectrum = build_spectrum(report);
    const TestResult* focus = nullptr;
    for (const auto& r : report.results) {
      if (is_failing(r.status) && r.trace && !focus) focus = &r;
    }
    ranked = rank(suspiciousness(spectrum, Formula::kOchiai), focus->trace, 10);
    plan = plan_breakpoints(ranked, spectrum, *focus, 3);
    // Reference lines the student's program does not contain.
    std::set<std::string> have;
    for (const auto& l : submission.source.lines()) have.insert(normalize_line(l));
    for (const auto& l : bundle.reference_source.lines()) {
      auto n = normalize_line(l);
      if (!n.empty() && !have.count(n)) reference_only.push_back(n);
    }
  }
  TutorContext ctx() const { return {&bundle, &submission.source, &report, &spectrum, &ranked, &plan}; }
};

// Runs 1000 random sequences; returns the serialized final states.
std::string run_sequences(const std::vector<std::unique_ptr<DialogueContext>>& contexts, Checks& c) {
  HintEngine engine(std::make_shared<MockLlmClient>(mock_llm_dir()), PromptTemplates::builtin(), {},
                    [] { return std::string("2024-01-01T00:00:00Z"); });
  const std::vector<std::string> messages = {"why is this breakpoint here?", "I'm stuck", "what does line 7 do?",
                                             "just give me the solution", "next", "ok thanks", "more help please"};
  std::mt19937_64 rng(99);
  std::string all;
  for (int seq = 0; seq < 1000; ++seq) {
    const auto& dc = *contexts[static_cast<std::size_t>(seq) % contexts.size()];
    auto ctx = dc.ctx();
    DialogueState s;
    s.session_id = "seq" + std::to_string(seq);
    s.mode = seq % 2 ? DialogueMode::kInteractiveGuidance : DialogueMode::kGenerateHints;
    std::uniform_int_distribution<int> len(1, 20), kind(0, 9), msg(0, static_cast<int>(messages.size()) - 1);
    int n = len(rng);
    for (int step = 0; step < n; ++step) {
      int k = kind(rng);
      DialogueEvent ev = k < 2   ? DialogueEvent::tests_failed()
                         : k < 6 ? DialogueEvent::more_help()
                         : k < 9 ? DialogueEvent::student_message(messages[static_cast<std::size_t>(msg(rng))])
                                 : DialogueEvent::fix_verified();
      if (s.solved) {
        bool rejected = false;
        try {
          engine.advance(s, ev, ctx);
        } catch (const Error& e) {
          rejected = e.code() == ErrorCode::kSessionSolved;
        }
        c.expect(rejected, "event accepted after fix_verified");
        continue;
      }
      auto [next, turn] = engine.advance(s, ev, ctx);
      c.expect(next.level >= s.level, "level decreased");
      c.expect(next.level <= s.level + 1, "level jumped by more than one");
      c.expect(next.level <= kMaxHintLevel, "level above maximum");
      c.expect(ev.kind != EventKind::kFixVerified || next.solved, "fix_verified did not solve");
      s = std::move(next);
    }
    for (const auto& entry : s.transcript) {
      if (entry.role != Role::kAssistant || entry.level_at_emission >= kMaxHintLevel) continue;
      for (const auto& line : split_lines(entry.text)) {
        auto norm = normalize_line(line);
        for (const auto& ref : dc.reference_only) {
          c.expect(norm.find(ref) == std::string::npos, "reference line '" + ref + "' leaked at level " +
                                                            std::to_string(entry.level_at_emission));
        }
      }
    }
    all += to_json(s).dump() + "\n";
  }
  return all;
}

Outcome dialogue() {
  Checks c;
  auto t0 = Clock::now();
  std::vector<std::unique_ptr<DialogueContext>> contexts;
  for (std::string id : {"listing1", "max_operations", "longest_ones"}) {
    contexts.push_back(std::make_unique<DialogueContext>(id));
  }
  auto first = run_sequences(contexts, c);
  auto second = run_sequences(contexts, c);
  c.expect(first == second, "transcripts differ between runs");
  double secs = seconds_since(t0);
  c.expect(secs < 10.0, "runtime " + fmt(secs) + " s >= 10 s");
  return c.outcome("1000 sequences x2, byte-identical (" + std::to_string(first.size()) + " bytes), no leaks; " +
                   fmt(secs) + " s");
}

// Spawns `sidb serve` on a free port and stops it on destruction.
class ServeProcess {
 public:
  explicit ServeProcess(const fs::path& store) {
    int fds[2];
    if (::pipe(fds) != 0) return;
    posix_spawn_file_actions_t fa;
    posix_spawn_file_actions_init(&fa);
    posix_spawn_file_actions_adddup2(&fa, fds[1], STDOUT_FILENO);
    posix_spawn_file_actions_addclose(&fa, fds[0]);
    std::vector<std::string> args = {SIDB_CLI_PATH,
                                     "serve",
                                     "--host",
                                     "127.0.0.1",
                                     "--port",
                                     "0",
                                     "--bundles",
                                     (fixtures_dir() / "bundles").string(),
                                     "--mock",
                                     mock_llm_dir().string(),
                                     "--store",
                                     store.string(),
                                     "--mode",
                                     "interactive_guidance"};
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    if (posix_spawn(&pid_, argv[0], &fa, nullptr, argv.data(), environ) != 0) pid_ = -1;
    posix_spawn_file_actions_destroy(&fa);
    ::close(fds[1]);
    std::string line;
    char ch;
    while (pid_ > 0 && ::read(fds[0], &ch, 1) == 1 && ch != '\n') line += ch;
    ::close(fds[0]);
    banner = line;
    auto host = line.find("://");
    auto colon = host == std::string::npos ? host : line.find(':', host + 3);
    if (line.rfind("listening on ", 0) == 0 && colon != std::string::npos) port = std::atoi(line.c_str() + colon + 1);
  }
  ~ServeProcess() {
    if (pid_ > 0) {
      ::kill(pid_, port > 0 ? SIGTERM : SIGKILL);
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
  }

  int port = 0;
  std::string banner;

 private:
  pid_t pid_ = -1;
};

Outcome end_to_end() {
  Checks c;
  auto t0 = Clock::now();
  auto store = temp_dir("e2e");
  ServeProcess server(store);
  if (server.port <= 0) return {false, "server did not start: '" + server.banner + "'"};
  c.expect(server.banner.find("deterministic_mock") != std::string::npos, "server not using the mock assistant");
  httplib::Client cli("127.0.0.1", server.port);
  cli.set_read_timeout(30, 0);
  auto call = [&](const std::string& method, const std::string& path, const json& body, int want) -> json {
    auto res = method == "PUT" ? cli.Put(path, body.dump(), "application/json")
                               : cli.Post(path, body.is_null() ? "" : body.dump(), "application/json");
    if (!res) {
      c.expect(false, method + " " + path + ": no response");
      return json::object();
    }
    c.expect(res->status == want, method + " " + path + " -> " + std::to_string(res->status) + " " + res->body);
    return json::parse(res->body, nullptr, false);
  };
  auto source = [](const std::string& which) {
    return read_text(bundle_dir("listing1") / "submissions" / which / "solution.py");
  };

  auto created = call("POST", "/sessions", json{{"bundle_id", "listing1"}, {"submission", {{"source", source("buggy")}}}}, 201);
  std::string id = created.value("session_id", "");
  auto ran = call("POST", "/sessions/" + id + "/run", nullptr, 200);
  c.expect(ran.value("level", -1) == 1 && !ran.value("solved", true), "first run did not enter level 1");
  for (int want = 2; want <= 4; ++want) {
    auto h = call("POST", "/sessions/" + id + "/hint", nullptr, 200);
    c.expect(h.value("level", -1) == want, "hint did not reach level " + std::to_string(want));
  }
  for (std::string text : {"why is this breakpoint here?", "what should happen to a missing grade?"}) {
    auto ch = call("POST", "/sessions/" + id + "/chat", json{{"text", text}}, 200);
    c.expect(ch.value("kind", "") == "chat" && !ch.value("text", "").empty(), "chat turn missing");
  }
  call("PUT", "/sessions/" + id + "/submission", json{{"source", source("fixed")}}, 200);
  auto done = call("POST", "/sessions/" + id + "/run", nullptr, 200);
  c.expect(done.value("solved", false), "fixed submission did not reach solved");
  double secs = seconds_since(t0);
  fs::remove_all(store);
  return c.outcome("create, run, hint x3, chat x2, fix, solved over HTTP on port " + std::to_string(server.port) +
                   "; " + fmt(secs) + " s");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"sbfl-oracle-equivalence", sbfl_oracle},
      {"listing1-golden-scenario", listing_golden},
      {"corpus-fixtures", corpus},
      {"mutation-assessment", mutation},
      {"custom-test-validation", custom_tests},
      {"dialogue-properties", dialogue},
      {"end-to-end-headless-flow", end_to_end},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.ok ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    failed += o.ok ? 0 : 1;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
