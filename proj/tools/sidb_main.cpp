// Command-line front end: bundle validation, runs, localization, breakpoint
// plans, suite assessment, custom-test checks, the HTTP server and a
// terminal tutoring session.
#include <pthread.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "sidb/breakpoints.hpp"
#include "sidb/bundle.hpp"
#include "sidb/error.hpp"
#include "sidb/hints.hpp"
#include "sidb/http_api.hpp"
#include "sidb/llm.hpp"
#include "sidb/mutation.hpp"
#include "sidb/prompts.hpp"
#include "sidb/sbfl.hpp"
#include "sidb/service.hpp"
#include "sidb/testcheck.hpp"

namespace fs = std::filesystem;
using namespace sidb;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileMissing, "cannot read " + path, path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidArgument, path + ": " + e.what(), path);
  }
}

struct RunnerFlags {
  std::string runner_file;
  std::string record_dir;

  void add(CLI::App* app) {
    app->add_option("--runner", runner_file, "Adapter config (JSON) replacing the bundle's runner");
    app->add_option("--record", record_dir, "Freeze every subprocess report into DIR as replay files");
  }

  Runner make(const AssignmentBundle& b) const {
    AdapterConfig cfg = b.runner;
    if (!runner_file.empty()) cfg = adapter_config_from_json(read_json_file(runner_file));
    if (!record_dir.empty()) cfg.record_dir = fs::absolute(record_dir).string();
    return Runner(b.target_runtime, cfg, b.root);
  }
};

void emit(const std::string& text, const std::string& out_file) {
  if (out_file.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(out_file);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + out_file, out_file);
  out << text << '\n';
}

// Report plus the failing test the ranking uses for tie-breaks.
struct Localized {
  TestRunReport report;
  CoverageSpectrum spectrum;
  RankedLines ranked;
  const TestResult* focus = nullptr;
};

TestRunReport obtain_report(const std::string& report_file, const std::string& bundle_dir,
                            const std::string& submission, const RunnerFlags& rf) {
  if (!report_file.empty()) return run_report_from_json(read_json_file(report_file));
  if (bundle_dir.empty() || submission.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "give --report FILE or a bundle and a submission");
  }
  auto bundle = load_bundle(bundle_dir);
  auto sub = load_submission(submission, bundle);
  return rf.make(bundle).run_tests(sub.source, bundle.tests, TargetLabel::submission());
}

void localize_into(Localized& out, Formula formula, std::size_t k) {
  out.spectrum = build_spectrum(out.report);
  for (const auto& r : out.report.results) {
    if (is_failing(r.status) && r.trace && !r.trace->empty()) {
      out.focus = &r;
      break;
    }
  }
  out.ranked = rank(suspiciousness(out.spectrum, formula), out.focus ? out.focus->trace : std::nullopt, k);
}

std::string format_turn(const AssistantTurn& t) {
  std::ostringstream s;
  s << "assistant [level " << t.level << ", " << to_string(t.kind) << "]\n" << t.text << "\n";
  return s.str();
}


}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sidb: assisted debugging engine"};
  app.require_subcommand(1);

  // validate-bundle
  std::string vb_dir;
  RunnerFlags vb_runner;
  auto* vb = app.add_subcommand("validate-bundle", "Run the suite against the reference solution");
  vb->add_option("bundle", vb_dir, "Bundle directory")->required();
  vb_runner.add(vb);

  // run
  std::string run_bundle, run_submission, run_out;
  RunnerFlags run_runner;
  auto* run = app.add_subcommand("run", "Run the suite against a submission; prints sidb.run.v1");
  run->add_option("bundle", run_bundle)->required();
  run->add_option("submission", run_submission, "Source file or submission directory");
  run->add_option("--out", run_out, "Write the report to a file");
  run_runner.add(run);
  bool run_reference = false;
  run->add_flag("--on-reference", run_reference, "Run against the bundle's reference instead");

  // localize
  std::string loc_bundle, loc_submission, loc_report, loc_formula = "ochiai", loc_format = "json";
  std::size_t loc_k = 10;
  RunnerFlags loc_runner;
  auto* loc = app.add_subcommand("localize", "Rank suspicious lines");
  loc->add_option("bundle", loc_bundle);
  loc->add_option("submission", loc_submission);
  loc->add_option("--report", loc_report, "Use a saved sidb.run.v1 report instead of running");
  loc->add_option("--formula", loc_formula)->check(CLI::IsMember({"ochiai", "tarantula", "dstar2", "op2"}));
  loc->add_option("-k,--top", loc_k, "Number of lines");
  loc->add_option("--format", loc_format)->check(CLI::IsMember({"json", "table"}));
  loc_runner.add(loc);

  // plan-breakpoints
  std::string pb_bundle, pb_submission, pb_report, pb_formula = "ochiai", pb_export = "sidb";
  std::size_t pb_max = kDefaultMaxBreakpoints;
  RunnerFlags pb_runner;
  auto* pb = app.add_subcommand("plan-breakpoints", "Plan breakpoints for the top-ranked lines");
  pb->add_option("bundle", pb_bundle);
  pb->add_option("submission", pb_submission);
  pb->add_option("--report", pb_report, "Use a saved sidb.run.v1 report instead of running");
  pb->add_option("--formula", pb_formula)->check(CLI::IsMember({"ochiai", "tarantula", "dstar2", "op2"}));
  pb->add_option("--max", pb_max, "Maximum number of breakpoints");
  pb->add_option("--export", pb_export)->check(CLI::IsMember({"sidb", "editor"}));
  pb_runner.add(pb);

  // assess-suite
  std::string as_bundle, as_ops = "AOR,ROR,CRP", as_format = "json", as_tests;
  std::optional<std::size_t> as_limit;
  std::uint64_t as_seed = 0;
  double as_threshold = kDefaultStrengthThreshold;
  int as_parallel = 1;
  bool as_verify = false;
  RunnerFlags as_runner;
  auto* as = app.add_subcommand("assess-suite", "Mutation-based strength of the bundle's tests");
  as->add_option("bundle", as_bundle)->required();
  as->add_option("--operators", as_ops, "Comma-separated: AOR,ROR,LOR,CRP,BNF");
  as->add_option("--limit", as_limit, "Sample this many mutants");
  as->add_option("--seed", as_seed);
  as->add_option("--threshold", as_threshold);
  as->add_option("--tests", as_tests, "Comma-separated test ids to keep (default: all)");
  as->add_option("-j,--parallel", as_parallel);
  as->add_flag("--verify", as_verify, "Re-run every killing test on its mutant");
  as->add_option("--format", as_format)->check(CLI::IsMember({"json", "table"}));
  as_runner.add(as);

  // check-tests
  std::string ct_bundle, ct_file, ct_format = "json";
  RunnerFlags ct_runner;
  auto* ct = app.add_subcommand("check-tests", "Check student tests against the reference");
  ct->add_option("bundle", ct_bundle)->required();
  ct->add_option("tests", ct_file, "JSON list of tests, or a submission directory")->required();
  ct->add_option("--format", ct_format)->check(CLI::IsMember({"json", "table"}));
  ct_runner.add(ct);

  // serve
  std::string sv_host = "127.0.0.1", sv_store = "sidb-store", sv_bundles = "bundles", sv_mock, sv_mode = "generate_hints",
              sv_prompts, sv_runner_file;
  int sv_port = 8080;
  auto* sv = app.add_subcommand("serve", "Serve the HTTP API");
  sv->add_option("--host", sv_host);
  sv->add_option("--port", sv_port, "0 picks a free port");
  sv->add_option("--store", sv_store, "Session store directory");
  sv->add_option("--bundles", sv_bundles, "Directory of bundle directories");
  sv->add_option("--mock", sv_mock, "Use the deterministic mock assistant with fixtures from DIR");
  sv->add_option("--mode", sv_mode)->check(CLI::IsMember({"generate_hints", "interactive_guidance"}));
  sv->add_option("--prompts", sv_prompts, "Prompt template directory");
  sv->add_option("--runner", sv_runner_file, "Adapter config used for every bundle");

  // chat
  std::string ch_bundle, ch_submission, ch_mock, ch_store, ch_mode = "interactive_guidance";
  bool ch_use_mock = false;
  RunnerFlags ch_runner;
  auto* ch = app.add_subcommand("chat", "Tutoring session in the terminal (:run, :hint, :plan, :quit)");
  ch->add_option("bundle", ch_bundle)->required();
  ch->add_option("submission", ch_submission)->required();
  ch->add_flag("--mock", ch_use_mock, "Use the deterministic mock assistant");
  ch->add_option("--mock-dir", ch_mock, "Mock fixtures (default: SIDB_LLM_MOCK_DIR)");
  ch->add_option("--store", ch_store, "Session store directory (default: temporary)");
  ch->add_option("--mode", ch_mode)->check(CLI::IsMember({"generate_hints", "interactive_guidance"}));
  ch->add_option("--runner", ch_runner.runner_file);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*vb) {
      auto bundle = load_bundle(vb_dir);
      auto report = validate_bundle(bundle, vb_runner.make(bundle));
      emit(to_json(report).dump(2), "");
      return report.valid ? 0 : 1;
    }

    if (*run) {
      auto bundle = load_bundle(run_bundle);
      auto runner = run_runner.make(bundle);
      TestRunReport report;
      if (run_reference) {
        report = runner.run_tests(bundle.reference_source, bundle.tests, TargetLabel::reference());
      } else {
        auto sub = load_submission(run_submission, bundle);
        report = runner.run_tests(sub.source, bundle.tests, TargetLabel::submission());
      }
      emit(to_json(report).dump(2), run_out);
      return report.failing_count() == 0 ? 0 : 1;
    }

    if (*loc) {
      Localized l;
      l.report = obtain_report(loc_report, loc_bundle, loc_submission, loc_runner);
      localize_into(l, parse_formula(loc_formula), loc_k);
      emit(loc_format == "table" ? format_table(l.ranked) : to_json(l.ranked).dump(2), "");
      return 0;
    }

    if (*pb) {
      Localized l;
      l.report = obtain_report(pb_report, pb_bundle, pb_submission, pb_runner);
      localize_into(l, parse_formula(pb_formula), std::max<std::size_t>(pb_max, 10));
      if (l.focus == nullptr) throw Error(ErrorCode::kNoTrace, "no failing test has a trace");
      auto plan = plan_breakpoints(l.ranked, l.spectrum, *l.focus, pb_max);
      emit(export_plan(plan, pb_export == "editor" ? PlanFormat::kEditor : PlanFormat::kSidb), "");
      return 0;
    }

    if (*as) {
      auto bundle = load_bundle(as_bundle);
      if (!as_tests.empty()) {
        std::vector<TestCase> kept;
        std::stringstream ss(as_tests);
        for (std::string id; std::getline(ss, id, ',');) {
          const auto* t = bundle.find_test(trim(id));
          if (t == nullptr) throw Error(ErrorCode::kInvalidArgument, "unknown test '" + id + "'", id);
          kept.push_back(*t);
        }
        bundle.tests = std::move(kept);
      }
      auto runner = as_runner.make(bundle);
      auto ops = parse_mutation_operators(as_ops);
      auto mutants = generate_mutants(bundle.reference_source, ops, as_limit, as_seed);
      AssessOptions opt;
      opt.threshold = as_threshold;
      opt.parallelism = as_parallel;
      auto a = assess_suite(bundle, mutants, runner, opt);
      if (as_format == "table") {
        emit(format_table(a, mutants), "");
      } else {
        emit(to_json(a, mutants).dump(2), "");
      }
      if (as_verify) {
        auto problems = verify_kills(a, mutants, bundle, runner);
        for (const auto& p : problems) std::cerr << "kill not reproduced: " << p << "\n";
        if (!problems.empty()) return 1;
      }
      return 0;
    }

    if (*ct) {
      auto bundle = load_bundle(ct_bundle);
      std::vector<TestCase> tests;
      if (fs::is_directory(ct_file)) {
        tests = load_submission(ct_file, bundle).custom_tests;
      } else {
        auto j = read_json_file(ct_file);
        const json& list = j.is_object() && j.contains("tests") ? j.at("tests") : j;
        auto base = fs::path(ct_file).parent_path();
        for (const auto& t : list) tests.push_back(custom_test_from_json(t, base));
      }
      auto report = validate_custom_tests(bundle, tests, ct_runner.make(bundle));
      emit(ct_format == "table" ? format_table(report) : to_json(report).dump(2), "");
      return 0;
    }

    if (*sv) {
      std::shared_ptr<LlmClient> llm =
          sv_mock.empty() ? llm_client_from_env() : std::make_shared<MockLlmClient>(sv_mock);
      ServiceOptions opt;
      opt.default_mode = parse_dialogue_mode(sv_mode);
      if (!sv_runner_file.empty()) opt.runner_override = adapter_config_from_json(read_json_file(sv_runner_file));
      auto templates = sv_prompts.empty() ? PromptTemplates::builtin() : PromptTemplates::load(sv_prompts);
      Service service(BundleRegistry::load_dir(sv_bundles), SessionStore(sv_store), llm, templates, opt);
      HttpServer server(service);
      int port = server.bind(sv_host, sv_port);
      if (port < 0) {
        std::cerr << "cannot bind " << sv_host << ":" << sv_port << "\n";
        return 2;
      }
      // A signal may land before listen() starts, so keep stopping until it returns.
      sigset_t stop_signals;
      sigemptyset(&stop_signals);
      sigaddset(&stop_signals, SIGINT);
      sigaddset(&stop_signals, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);
      std::atomic<bool> served{false};
      std::thread stopper([&server, &served, stop_signals] {
        int sig = 0;
        sigwait(&stop_signals, &sig);
        while (!served) {
          server.stop();
          std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
      });
      std::cout << "listening on http://" << sv_host << ":" << port << " (assistant: "
                << (llm ? llm->backend() : std::string("none")) << ")" << std::endl;
      server.listen();
      served = true;
      pthread_kill(stopper.native_handle(), SIGTERM);
      stopper.join();
      return 0;
    }

    if (*ch) {
      auto bundle = load_bundle(ch_bundle);
      std::shared_ptr<LlmClient> llm;
      if (ch_use_mock || !ch_mock.empty()) {
        std::string dir = ch_mock;
        if (dir.empty()) {
          const char* env = std::getenv("SIDB_LLM_MOCK_DIR");
          dir = env != nullptr ? env : "";
        }
        llm = std::make_shared<MockLlmClient>(dir);
      } else {
        llm = llm_client_from_env();
      }
      fs::path store_dir = ch_store.empty() ? fs::temp_directory_path() / ("sidb-chat-" + new_session_id()) : fs::path(ch_store);
      ServiceOptions opt;
      if (!ch_runner.runner_file.empty()) opt.runner_override = adapter_config_from_json(read_json_file(ch_runner.runner_file));
      auto registry = std::make_shared<BundleRegistry>();
      auto bundle_id = bundle.id;
      auto submission = load_submission(ch_submission, bundle);
      registry->add(std::move(bundle));
      Service service(registry, SessionStore(store_dir), llm, PromptTemplates::builtin(), opt);
      auto session = service.create_session(bundle_id, submission, parse_dialogue_mode(ch_mode));
      std::cout << "session " << session.session_id << " (" << ch_mode << "). Commands: :run :hint :plan :quit\n";
      for (std::string line; std::cout << "> " << std::flush, std::getline(std::cin, line);) {
        line = trim(line);
        if (line.empty()) continue;
        try {
          if (line == ":quit" || line == ":q") break;
          if (line == ":run") {
            auto s = service.run_and_localize(session.session_id);
            const auto& r = *s.artifacts.report;
            std::cout << r.results.size() - r.failing_count() << "/" << r.results.size() << " tests passing\n";
            if (!s.dialogue.transcript.empty()) {
              const auto& last = s.dialogue.transcript.back();
              std::cout << "assistant [level " << last.level_at_emission << "]\n" << last.text << "\n";
            }
            if (s.dialogue.solved) break;
          } else if (line == ":hint") {
            std::cout << format_turn(service.next_hint(session.session_id));
          } else if (line == ":plan") {
            std::cout << export_plan(service.plan(session.session_id), PlanFormat::kSidb) << "\n";
          } else {
            std::cout << format_turn(service.chat(session.session_id, line));
          }
        } catch (const Error& e) {
          std::cout << "error: " << e.what() << "\n";
        }
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
