#include "sidb/runner.hpp"

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <future>
#include <sstream>
#include <thread>

#include "fs_util.hpp"
#include "sidb/error.hpp"

extern char** environ;

namespace sidb {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void protocol(const std::string& what) {
  throw Error(ErrorCode::kAdapterProtocol, what);
}

std::string cut_utf8(const std::string& s, std::size_t cap) {
  if (s.size() <= cap) return s;
  std::size_t n = cap;
  while (n > 0 && (static_cast<unsigned char>(s[n]) & 0xC0) == 0x80) --n;
  return s.substr(0, n);
}

std::string replace_all(std::string s, std::string_view from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

bool on_path(const std::string& exe) {
  if (exe.find('/') != std::string::npos) return ::access(exe.c_str(), X_OK) == 0;
  const char* path = std::getenv("PATH");
  if (path == nullptr) return false;
  std::stringstream ss(path);
  std::string dir;
  while (std::getline(ss, dir, ':')) {
    if (dir.empty()) dir = ".";
    if (::access((fs::path(dir) / exe).c_str(), X_OK) == 0) return true;
  }
  return false;
}

std::string source_extension(const SourceFile& source) {
  auto ext = fs::path(source.path).extension().string();
  return ext.empty() ? ".txt" : ext;
}

}  // namespace

// ---------------------------------------------------------------------------
// Enumerations

std::string_view to_string(TestStatus s) {
  switch (s) {
    case TestStatus::kPassed: return "passed";
    case TestStatus::kFailed: return "failed";
    case TestStatus::kErrored: return "errored";
    case TestStatus::kTimeout: return "timeout";
  }
  return "errored";
}

std::string_view to_string(FailureKind k) {
  switch (k) {
    case FailureKind::kAssertion: return "assertion";
    case FailureKind::kException: return "exception";
    case FailureKind::kTimeout: return "timeout";
  }
  return "exception";
}

TestStatus parse_test_status(std::string_view t) {
  if (t == "passed") return TestStatus::kPassed;
  if (t == "failed") return TestStatus::kFailed;
  if (t == "errored") return TestStatus::kErrored;
  if (t == "timeout") return TestStatus::kTimeout;
  protocol("unknown status '" + std::string(t) + "'");
}

FailureKind parse_failure_kind(std::string_view t) {
  if (t == "assertion") return FailureKind::kAssertion;
  if (t == "exception") return FailureKind::kException;
  if (t == "timeout") return FailureKind::kTimeout;
  protocol("unknown failure_kind '" + std::string(t) + "'");
}

TargetLabel TargetLabel::parse(std::string_view text) {
  if (text == "reference") return reference();
  if (text == "submission") return submission();
  if (text.starts_with("mutant(") && text.ends_with(")")) {
    return mutant(std::string(text.substr(7, text.size() - 8)));
  }
  protocol("unknown target label '" + std::string(text) + "'");
}

std::string TargetLabel::str() const {
  switch (kind) {
    case Kind::kReference: return "reference";
    case Kind::kSubmission: return "submission";
    case Kind::kMutant: return "mutant(" + mutant_id + ")";
  }
  return "submission";
}

const TestResult* TestRunReport::find(std::string_view test_id) const {
  for (const auto& r : results) {
    if (r.test_id == test_id) return &r;
  }
  return nullptr;
}

std::size_t TestRunReport::failing_count() const {
  return static_cast<std::size_t>(
      std::count_if(results.begin(), results.end(), [](const TestResult& r) {
        return is_failing(r.status);
      }));
}

// ---------------------------------------------------------------------------
// AdapterConfig

void AdapterConfig::check() const {
  auto bad = [](const std::string& field, const std::string& msg) {
    throw Error(ErrorCode::kManifestMalformed, "runner." + field + ": " + msg, "runner." + field);
  };
  if (kind == AdapterKind::kSubprocess) {
    if (command_template.empty()) bad("command", "subprocess adapter needs a command template");
    auto has = [&](std::string_view ph) {
      return std::any_of(command_template.begin(), command_template.end(),
                         [&](const std::string& a) { return a.find(ph) != std::string::npos; });
    };
    if (!has("{SOURCE}")) bad("command", "command template lacks {SOURCE}");
    if (!has("{OUT}")) bad("command", "command template lacks {OUT}");
  } else if (report_dir.empty()) {
    bad("report_dir", "replay adapter needs a report directory");
  }
  if (!(timeout_per_test > 0)) bad("timeout_per_test", "must be > 0");
  if (trace_event_cap < 1) bad("trace_event_cap", "must be >= 1");
  if (parallelism < 1) bad("parallelism", "must be >= 1");
}

AdapterConfig adapter_config_from_json(const json& j) {
  auto bad = [](const std::string& field, const std::string& msg) {
    throw Error(ErrorCode::kManifestMalformed, "runner." + field + ": " + msg, "runner." + field);
  };
  if (!j.is_object()) bad("", "runner config must be an object");
  AdapterConfig cfg;
  auto kind = j.value("adapter", std::string("subprocess"));
  if (kind == "subprocess") {
    cfg.kind = AdapterKind::kSubprocess;
  } else if (kind == "replay") {
    cfg.kind = AdapterKind::kReplay;
  } else {
    bad("adapter", "unknown adapter '" + kind + "'");
  }
  try {
    if (j.contains("command")) cfg.command_template = j.at("command").get<std::vector<std::string>>();
    cfg.report_dir = j.value("report_dir", std::string());
    cfg.timeout_per_test = j.value("timeout_per_test", 10.0);
    cfg.trace_enabled = j.value("trace", true);
    cfg.trace_event_cap = j.value("trace_event_cap", 5000);
    cfg.record_dir = j.value("record_dir", std::string());
    cfg.parallelism = j.value("parallelism", 1);
  } catch (const json::exception& e) {
    bad("", e.what());
  }
  cfg.check();
  return cfg;
}

json to_json(const AdapterConfig& cfg) {
  json j;
  j["adapter"] = cfg.kind == AdapterKind::kSubprocess ? "subprocess" : "replay";
  if (!cfg.command_template.empty()) j["command"] = cfg.command_template;
  if (!cfg.report_dir.empty()) j["report_dir"] = cfg.report_dir;
  if (!cfg.record_dir.empty()) j["record_dir"] = cfg.record_dir;
  j["timeout_per_test"] = cfg.timeout_per_test;
  j["trace"] = cfg.trace_enabled;
  j["trace_event_cap"] = cfg.trace_event_cap;
  j["parallelism"] = cfg.parallelism;
  return j;
}

// ---------------------------------------------------------------------------
// Report serialization

json to_json(const TraceEvent& ev) {
  return json{{"file", ev.file}, {"line", ev.line}, {"seq", ev.seq}, {"locals", ev.locals}};
}

json to_json(const TestResult& r) {
  json j;
  j["schema"] = kRunTestSchema;
  j["test_id"] = r.test_id;
  j["status"] = to_string(r.status);
  if (r.failure_kind) j["failure_kind"] = to_string(*r.failure_kind);
  j["message"] = r.message;
  json cov = json::object();
  for (const auto& [file, lines] : r.covered_lines) cov[file] = std::vector<int>(lines.begin(), lines.end());
  j["covered_lines"] = cov;
  if (r.trace) {
    json t = json::array();
    for (const auto& ev : *r.trace) t.push_back(to_json(ev));
    j["trace"] = std::move(t);
  }
  return j;
}

json to_json(const TestRunReport& r) {
  json results = json::array();
  for (const auto& res : r.results) results.push_back(to_json(res));
  return json{{"schema", kRunSchema}, {"target", r.target.str()}, {"results", results}};
}

TestResult test_result_from_json(const json& j, int trace_event_cap) {
  if (!j.is_object()) protocol("report is not an object");
  auto str_field = [&](const char* key, bool required) -> std::string {
    if (!j.contains(key) || j.at(key).is_null()) {
      if (required) protocol(std::string("missing field '") + key + "'");
      return {};
    }
    if (!j.at(key).is_string()) protocol(std::string("field '") + key + "' must be a string");
    return j.at(key).get<std::string>();
  };
  if (str_field("schema", true) != kRunTestSchema) protocol("schema must be " + std::string(kRunTestSchema));

  TestResult r;
  r.test_id = str_field("test_id", true);
  if (r.test_id.empty()) protocol("empty test_id");
  r.status = parse_test_status(str_field("status", true));
  auto kind = str_field("failure_kind", false);
  if (!kind.empty()) r.failure_kind = parse_failure_kind(kind);
  if (r.status == TestStatus::kPassed && r.failure_kind) protocol("passed test carries failure_kind");
  if (r.status == TestStatus::kTimeout && !r.failure_kind) r.failure_kind = FailureKind::kTimeout;
  r.message = str_field("message", false);

  if (j.contains("covered_lines")) {
    const auto& cov = j.at("covered_lines");
    if (!cov.is_object()) protocol("covered_lines must be an object");
    for (const auto& [file, lines] : cov.items()) {
      if (!lines.is_array()) protocol("covered_lines." + file + " must be an array");
      auto& set = r.covered_lines[file];
      for (const auto& ln : lines) {
        if (!ln.is_number_integer() || ln.get<long>() < 1) protocol("line numbers must be integers >= 1");
        set.insert(ln.get<int>());
      }
      if (set.empty()) r.covered_lines.erase(file);
    }
  }

  if (j.contains("trace") && !j.at("trace").is_null()) {
    const auto& t = j.at("trace");
    if (!t.is_array()) protocol("trace must be an array");
    if (t.size() > static_cast<std::size_t>(trace_event_cap)) {
      protocol("trace has " + std::to_string(t.size()) + " events, cap is " + std::to_string(trace_event_cap));
    }
    std::vector<TraceEvent> events;
    events.reserve(t.size());
    std::map<std::string, std::set<int>> seen;
    for (const auto& e : t) {
      if (!e.is_object()) protocol("trace event must be an object");
      TraceEvent ev;
      try {
        ev.file = e.at("file").get<std::string>();
        ev.line = e.at("line").get<int>();
        ev.seq = e.at("seq").get<long>();
        if (e.contains("locals")) {
          for (const auto& [name, value] : e.at("locals").items()) {
            ev.locals[name] = cut_utf8(value.get<std::string>(), kLocalValueCap);
          }
        }
      } catch (const json::exception& ex) {
        protocol(std::string("malformed trace event: ") + ex.what());
      }
      if (ev.line < 1) protocol("trace line must be >= 1");
      if (!events.empty() && ev.seq <= events.back().seq) protocol("trace seq must be strictly increasing");
      seen[ev.file].insert(ev.line);
      events.push_back(std::move(ev));
    }
    if (seen != r.covered_lines) protocol("covered_lines disagrees with the lines in trace");
    r.trace = std::move(events);
  }
  return r;
}

TestRunReport run_report_from_json(const json& j) {
  if (!j.is_object() || j.value("schema", std::string()) != kRunSchema) {
    protocol("run report schema must be " + std::string(kRunSchema));
  }
  TestRunReport rep;
  rep.target = TargetLabel::parse(j.value("target", std::string("submission")));
  std::set<std::string> ids;
  for (const auto& r : j.at("results")) {
    auto res = test_result_from_json(r, 1 << 30);
    if (!ids.insert(res.test_id).second) protocol("duplicate result for " + res.test_id);
    rep.results.push_back(std::move(res));
  }
  return rep;
}

OutcomeDiff diff_outcomes(const TestRunReport& a, const TestRunReport& b) {
  std::set<std::string> ia, ib;
  for (const auto& r : a.results) ia.insert(r.test_id);
  for (const auto& r : b.results) ib.insert(r.test_id);
  if (ia != ib) throw Error(ErrorCode::kTestSetMismatch, "reports cover different test ids");
  OutcomeDiff diff;
  for (const auto& ra : a.results) {
    const auto* rb = b.find(ra.test_id);
    if (rb->status != ra.status) diff.push_back({ra.test_id, ra.status, rb->status});
  }
  return diff;
}

// ---------------------------------------------------------------------------
// Runner

Runner::Runner(std::string runtime, AdapterConfig cfg, fs::path base_dir)
    : runtime_(std::move(runtime)), cfg_(std::move(cfg)), base_dir_(std::move(base_dir)) {
  cfg_.check();
}

fs::path Runner::resolve(const std::string& p) const {
  fs::path path(p);
  if (path.is_absolute() || base_dir_.empty()) return path;
  return base_dir_ / path;
}

std::string Runner::unavailable_reason() const {
  if (cfg_.kind == AdapterKind::kReplay) {
    auto dir = resolve(cfg_.report_dir);
    if (!fs::is_directory(dir)) return "replay directory " + dir.string() + " does not exist";
    return {};
  }
  const auto& exe = cfg_.command_template.front();
  if (exe.find('{') != std::string::npos) return {};
  if (!on_path(exe)) return "executable '" + exe + "' not found";
  return {};
}

fs::path Runner::replay_key(const SourceFile& source, const TestCase& test) {
  return fs::path(content_key(source.content)) /
         (test.id + "-" + content_key(test.payload) + ".json");
}

TestRunReport Runner::run_tests(const SourceFile& source, std::span<const TestCase> tests,
                                const TargetLabel& label) const {
  TestRunReport report;
  report.target = label;
  std::set<std::string> ids;
  for (const auto& t : tests) {
    if (!ids.insert(t.id).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate test id " + t.id, t.id);
    }
  }
  if (cfg_.parallelism <= 1 || tests.size() <= 1) {
    for (const auto& t : tests) report.results.push_back(run_one(source, t));
    return report;
  }
  // Fan out in waves of `parallelism`; gathered in input order.
  std::size_t i = 0;
  while (i < tests.size()) {
    std::vector<std::future<TestResult>> wave;
    for (int w = 0; w < cfg_.parallelism && i < tests.size(); ++w, ++i) {
      wave.push_back(std::async(std::launch::async, [this, &source, &t = tests[i]] {
        return run_one(source, t);
      }));
    }
    for (auto& f : wave) report.results.push_back(f.get());
  }
  return report;
}

TestResult Runner::run_one(const SourceFile& source, const TestCase& test) const {
  auto result = cfg_.kind == AdapterKind::kReplay ? run_replay(source, test)
                                                  : run_subprocess(source, test);
  if (!cfg_.trace_enabled) result.trace.reset();
  if (cfg_.kind == AdapterKind::kSubprocess && !cfg_.record_dir.empty()) record(source, test, result);
  return result;
}

void Runner::record(const SourceFile& source, const TestCase& test, const TestResult& result) const {
  auto path = resolve(cfg_.record_dir) / replay_key(source, test);
  detail::write_file_atomic(path, to_json(result).dump(1) + "\n");
}

TestResult Runner::run_replay(const SourceFile& source, const TestCase& test) const {
  auto dir = resolve(cfg_.report_dir);
  auto keyed = dir / replay_key(source, test);
  auto plain = dir / (test.id + ".json");
  fs::path path = fs::exists(keyed) ? keyed : plain;
  if (!fs::exists(path)) {
    throw Error(ErrorCode::kAdapterProtocol,
                "no recorded report for test " + test.id + " (looked for " + keyed.string() + ")",
                test.id);
  }
  json j;
  try {
    j = json::parse(detail::read_file(path));
  } catch (const json::parse_error& e) {
    protocol(path.string() + ": " + e.what());
  }
  auto r = test_result_from_json(j, cfg_.trace_event_cap);
  if (r.test_id != test.id) protocol(path.string() + " records test " + r.test_id + ", expected " + test.id);
  return r;
}

TestResult Runner::run_subprocess(const SourceFile& source, const TestCase& test) const {
  detail::TempDir tmp;
  auto src_path = tmp.path() / fs::path(source.path).filename();
  auto test_path = tmp.path() / (test.id + source_extension(source));
  auto out_path = tmp.path() / (test.id + ".report.json");
  detail::write_file_atomic(src_path, source.content);
  detail::write_file_atomic(test_path, test.payload);

  std::vector<std::string> args;
  for (auto a : cfg_.command_template) {
    a = replace_all(std::move(a), "{SOURCE}", src_path.string());
    a = replace_all(std::move(a), "{TEST}", test_path.string());
    a = replace_all(std::move(a), "{OUT}", out_path.string());
    a = replace_all(std::move(a), "{CAP}", std::to_string(cfg_.trace_event_cap));
    a = replace_all(std::move(a), "{BUNDLE}", base_dir_.string());
    args.push_back(std::move(a));
  }
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, "/dev/null", O_WRONLY, 0);
  auto err_path = (tmp.path() / "stderr.txt").string();
  posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, err_path.c_str(),
                                   O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
  posix_spawnattr_setpgroup(&attr, 0);

  pid_t pid = 0;
  int rc = ::posix_spawnp(&pid, argv[0], &actions, &attr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);
  if (rc != 0) {
    throw Error(ErrorCode::kSpawnFailure,
                "cannot spawn '" + args.front() + "': " + std::strerror(rc), args.front());
  }

  using clock = std::chrono::steady_clock;
  auto deadline = clock::now() + std::chrono::duration_cast<clock::duration>(
                                     std::chrono::duration<double>(cfg_.timeout_per_test));
  bool timed_out = false;
  for (;;) {
    int status = 0;
    pid_t w = ::waitpid(pid, &status, WNOHANG);
    if (w == pid || (w < 0 && errno != EINTR)) break;
    if (clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::kill(pid, SIGKILL);
      while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
      }
      timed_out = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  // Reap stragglers the test may have left in its process group.
  ::kill(-pid, SIGKILL);

  if (timed_out) {
    TestResult r;
    r.test_id = test.id;
    r.status = TestStatus::kTimeout;
    r.failure_kind = FailureKind::kTimeout;
    std::ostringstream msg;
    msg << "test exceeded the time limit of " << cfg_.timeout_per_test << " s";
    r.message = msg.str();
    if (cfg_.trace_enabled) r.trace = std::vector<TraceEvent>{};
    return r;
  }
  if (!fs::exists(out_path)) {
    std::string diag;
    try {
      diag = detail::read_file(err_path);
    } catch (const Error&) {
    }
    throw Error(ErrorCode::kRunnerCrash,
                "adapter wrote no report for test " + test.id + (diag.empty() ? "" : ": " + diag.substr(0, 400)),
                test.id);
  }
  json j;
  try {
    j = json::parse(detail::read_file(out_path));
  } catch (const json::parse_error& e) {
    protocol("report for " + test.id + " is not valid structured text: " + e.what());
  }
  auto r = test_result_from_json(j, cfg_.trace_event_cap);
  if (r.test_id != test.id) protocol("report names test " + r.test_id + ", expected " + test.id);
  return r;
}

}  // namespace sidb
