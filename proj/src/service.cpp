#include "sidb/service.hpp"

#include <fstream>
#include <random>

#include "fs_util.hpp"
#include "sidb/error.hpp"

namespace sidb {

namespace fs = std::filesystem;

std::string new_session_id() {
  static thread_local std::mt19937_64 rng{std::random_device{}() ^
                                         (static_cast<std::uint64_t>(std::random_device{}()) << 32)};
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                static_cast<unsigned long long>(rng()));
  return buf;
}

json to_json(const DialogueState& d) {
  json transcript = json::array();
  for (const auto& e : d.transcript) {
    transcript.push_back(
        {{"role", to_string(e.role)}, {"text", e.text}, {"timestamp", e.timestamp}, {"level", e.level_at_emission}});
  }
  return json{{"mode", to_string(d.mode)}, {"level", d.level}, {"solved", d.solved}, {"transcript", transcript}};
}

DialogueState dialogue_from_json(const json& j) {
  DialogueState d;
  d.mode = parse_dialogue_mode(j.at("mode").get<std::string>());
  d.level = j.at("level").get<int>();
  d.solved = j.at("solved").get<bool>();
  for (const auto& e : j.at("transcript")) {
    d.transcript.push_back({parse_role(e.at("role").get<std::string>()), e.at("text").get<std::string>(),
                            e.at("timestamp").get<std::string>(), e.at("level").get<int>()});
  }
  return d;
}

json to_json(const Session& s) {
  const auto& a = s.artifacts;
  return json{{"schema", "sidb.session.v1"},
              {"session_id", s.session_id},
              {"bundle_id", s.bundle_id},
              {"created", s.created},
              {"updated", s.updated},
              {"submission", to_json(s.submission)},
              {"dialogue", to_json(s.dialogue)},
              {"artifacts",
               {{"report", a.report ? to_json(*a.report) : json(nullptr)},
                {"ranked", a.ranked ? to_json(*a.ranked) : json(nullptr)},
                {"plan", a.plan ? to_json(*a.plan) : json(nullptr)}}}};
}

Session session_from_json(const json& j, const AssignmentBundle& bundle) {
  try {
    Session s;
    s.session_id = j.at("session_id").get<std::string>();
    s.bundle_id = j.at("bundle_id").get<std::string>();
    s.created = j.at("created").get<std::string>();
    s.updated = j.at("updated").get<std::string>();
    s.submission = submission_from_json(j.at("submission"), bundle);
    s.dialogue = dialogue_from_json(j.at("dialogue"));
    s.dialogue.session_id = s.session_id;
    const auto& a = j.at("artifacts");
    if (!a.at("report").is_null()) {
      s.artifacts.report = run_report_from_json(a.at("report"));
      if (s.artifacts.report->failing_count() > 0) s.artifacts.spectrum = build_spectrum(*s.artifacts.report);
    }
    if (!a.at("ranked").is_null()) s.artifacts.ranked = ranked_lines_from_json(a.at("ranked"));
    if (!a.at("plan").is_null()) s.artifacts.plan = plan_from_json(a.at("plan"));
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo, std::string("corrupt session document: ") + e.what());
  }
}

json to_json(const AssistantTurn& t) {
  json redactions = json::array();
  for (const auto& r : t.guardrail.redactions) {
    redactions.push_back({{"kind", to_string(r.kind)}, {"first_line", r.first_line}, {"last_line", r.last_line}});
  }
  return json{{"text", t.text},
              {"level", t.level},
              {"kind", to_string(t.kind)},
              {"guardrail", {{"passed", t.guardrail.passed}, {"redactions", redactions}}}};
}

// --- BundleRegistry

std::shared_ptr<BundleRegistry> BundleRegistry::load_dir(const fs::path& root) {
  auto reg = std::make_shared<BundleRegistry>();
  if (!fs::is_directory(root)) throw Error(ErrorCode::kFileMissing, "no bundle directory " + root.string(), root.string());
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory() && fs::exists(e.path() / "bundle.json")) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) reg->add(load_bundle(d));
  return reg;
}

void BundleRegistry::add(AssignmentBundle bundle) {
  std::lock_guard lk(mu_);
  auto id = bundle.id;
  bundles_[id] = std::make_shared<const AssignmentBundle>(std::move(bundle));
  validated_.erase(id);
}

std::shared_ptr<const AssignmentBundle> BundleRegistry::find(const std::string& id) const {
  std::lock_guard lk(mu_);
  auto it = bundles_.find(id);
  if (it == bundles_.end()) throw Error(ErrorCode::kBundleNotFound, "unknown bundle '" + id + "'", id);
  return it->second;
}

std::vector<std::string> BundleRegistry::ids() const {
  std::lock_guard lk(mu_);
  std::vector<std::string> out;
  for (const auto& [id, _] : bundles_) out.push_back(id);
  return out;
}

ValidationReport BundleRegistry::validation(const std::string& id, const Runner& runner) {
  auto bundle = find(id);
  {
    std::lock_guard lk(mu_);
    auto it = validated_.find(id);
    if (it != validated_.end()) return it->second;
  }
  auto report = sidb::validate_bundle(*bundle, runner);
  std::lock_guard lk(mu_);
  validated_[id] = report;
  return report;
}

// --- SessionStore

SessionStore::SessionStore(fs::path root) : root_(std::move(root)) { fs::create_directories(root_ / "sessions"); }

fs::path SessionStore::path_for(const std::string& session_id) const {
  return root_ / "sessions" / (session_id + ".json");
}

bool SessionStore::exists(const std::string& session_id) const {
  bool plain = !session_id.empty() && session_id.find_first_not_of("0123456789abcdef") == std::string::npos;
  return plain && fs::exists(path_for(session_id));
}

void SessionStore::save(const Session& s) const { detail::write_file_atomic(path_for(s.session_id), to_json(s).dump(2)); }

json SessionStore::load_document(const std::string& session_id) const {
  if (!exists(session_id)) throw Error(ErrorCode::kSessionNotFound, "unknown session '" + session_id + "'", session_id);
  try {
    return json::parse(detail::read_file(path_for(session_id)));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo, std::string("corrupt session document: ") + e.what(), session_id);
  }
}

// --- Service

Service::Service(std::shared_ptr<BundleRegistry> bundles, SessionStore store, std::shared_ptr<LlmClient> llm,
                 PromptTemplates templates, ServiceOptions options)
    : bundles_(std::move(bundles)),
      store_(std::move(store)),
      engine_(std::move(llm), std::move(templates), options.hints, options.clock),
      options_(std::move(options)) {}

Runner Service::runner_for(const AssignmentBundle& bundle) const {
  if (options_.runner_override) return Runner(bundle.target_runtime, *options_.runner_override, bundle.root);
  return bundle.make_runner();
}

std::shared_ptr<std::mutex> Service::lock_for(const std::string& session_id) {
  std::lock_guard lk(locks_mu_);
  auto& m = locks_[session_id];
  if (!m) m = std::make_shared<std::mutex>();
  return m;
}

Session Service::load(const std::string& session_id) const {
  auto doc = store_.load_document(session_id);
  auto bundle = bundles_->find(doc.at("bundle_id").get<std::string>());
  return session_from_json(doc, *bundle);
}

TutorContext Service::context(const Session& s, const AssignmentBundle& bundle) const {
  TutorContext ctx;
  ctx.bundle = &bundle;
  ctx.submission = &s.submission.source;
  const auto& a = s.artifacts;
  if (a.report) ctx.report = &*a.report;
  if (a.spectrum) ctx.spectrum = &*a.spectrum;
  if (a.ranked) ctx.ranked = &*a.ranked;
  if (a.plan) ctx.plan = &*a.plan;
  return ctx;
}

AssistantTurn Service::apply(Session& s, const AssignmentBundle& bundle, const DialogueEvent& ev) {
  auto [next, turn] = engine_.advance(s.dialogue, ev, context(s, bundle));
  s.dialogue = std::move(next);
  s.updated = utc_timestamp();
  store_.save(s);
  return turn;
}

Session Service::create_session(const std::string& bundle_id, Submission submission, std::optional<DialogueMode> mode) {
  auto bundle = bundles_->find(bundle_id);
  auto report = bundles_->validation(bundle_id, runner_for(*bundle));
  if (!report.valid) {
    std::string detail = report.issues.empty() ? "" : ": " + report.issues.front().message;
    throw Error(ErrorCode::kBundleInvalid, "bundle '" + bundle_id + "' failed validation" + detail, bundle_id);
  }
  if (submission.source.path != bundle->reference_source.path) {
    throw Error(ErrorCode::kSubmissionMismatch, "submission path must be " + bundle->reference_source.path,
                submission.source.path);
  }
  Session s;
  do {
    s.session_id = new_session_id();
  } while (store_.exists(s.session_id));
  s.bundle_id = bundle_id;
  s.submission = std::move(submission);
  s.dialogue.session_id = s.session_id;
  s.dialogue.mode = mode.value_or(options_.default_mode);
  s.created = s.updated = utc_timestamp();
  store_.save(s);
  return s;
}

Session Service::get(const std::string& session_id) {
  auto lk = lock_for(session_id);
  std::lock_guard g(*lk);
  return load(session_id);
}

Session Service::run_and_localize(const std::string& session_id) {
  auto lk = lock_for(session_id);
  std::lock_guard g(*lk);
  Session s = load(session_id);
  if (s.dialogue.solved) throw Error(ErrorCode::kSessionSolved, "session " + session_id + " is already solved");
  auto bundle = bundles_->find(s.bundle_id);
  auto runner = runner_for(*bundle);
  auto report = runner.run_tests(s.submission.source, bundle->tests, TargetLabel::submission());

  s.artifacts = {};
  s.artifacts.report = report;
  if (report.failing_count() == 0) {
    apply(s, *bundle, DialogueEvent::fix_verified());
    return s;
  }
  s.artifacts.spectrum = build_spectrum(report);
  const TestResult* focus = nullptr;
  for (const auto& r : report.results) {
    if (is_failing(r.status) && r.trace && !r.trace->empty()) {
      focus = &r;
      break;
    }
  }
  auto scores = suspiciousness(*s.artifacts.spectrum, options_.formula);
  s.artifacts.ranked = rank(scores, focus ? focus->trace : std::nullopt, options_.top_k);
  if (focus != nullptr && !s.artifacts.ranked->lines.empty()) {
    s.artifacts.plan = plan_breakpoints(*s.artifacts.ranked, *s.artifacts.spectrum, *focus, options_.max_breakpoints);
  }
  if (s.dialogue.level == 0) {
    apply(s, *bundle, DialogueEvent::tests_failed());
  } else {
    s.updated = utc_timestamp();
    store_.save(s);
  }
  return s;
}

AssistantTurn Service::next_hint(const std::string& session_id) {
  auto lk = lock_for(session_id);
  std::lock_guard g(*lk);
  Session s = load(session_id);
  auto bundle = bundles_->find(s.bundle_id);
  return apply(s, *bundle, DialogueEvent::more_help());
}

AssistantTurn Service::chat(const std::string& session_id, const std::string& text) {
  auto lk = lock_for(session_id);
  std::lock_guard g(*lk);
  Session s = load(session_id);
  if (s.dialogue.solved) throw Error(ErrorCode::kSessionSolved, "session " + session_id + " is already solved");
  if (s.dialogue.mode != DialogueMode::kInteractiveGuidance) {
    throw Error(ErrorCode::kWrongMode, "chat is only available in interactive_guidance mode");
  }
  auto bundle = bundles_->find(s.bundle_id);
  return apply(s, *bundle, DialogueEvent::student_message(text));
}

Session Service::update_submission(const std::string& session_id, const std::string& source) {
  auto lk = lock_for(session_id);
  std::lock_guard g(*lk);
  Session s = load(session_id);
  auto bundle = bundles_->find(s.bundle_id);
  auto custom = s.submission.custom_tests;
  s.submission = make_submission(s.submission.student_id, source, *bundle);
  s.submission.custom_tests = std::move(custom);
  s.artifacts = {};
  s.updated = utc_timestamp();
  store_.save(s);
  return s;
}

BreakpointPlan Service::plan(const std::string& session_id) {
  auto s = get(session_id);
  if (!s.artifacts.plan) throw Error(ErrorCode::kMissingContext, "no breakpoint plan yet; run the tests first");
  return *s.artifacts.plan;
}

std::vector<TraceEvent> Service::trace(const std::string& session_id, const std::string& test_id) {
  auto s = get(session_id);
  auto bundle = bundles_->find(s.bundle_id);
  const auto* t = bundle->find_test(test_id);
  if (t == nullptr) throw Error(ErrorCode::kInvalidArgument, "unknown test '" + test_id + "'", test_id);
  if (t->visibility == Visibility::kPrivate) {
    throw Error(ErrorCode::kPrivateTest, "the trace of private test " + test_id + " is not shown", test_id);
  }
  const TestResult* r = s.artifacts.report ? s.artifacts.report->find(test_id) : nullptr;
  if (r == nullptr || !r->trace) throw Error(ErrorCode::kNoTrace, "no trace recorded for " + test_id, test_id);
  return *r->trace;
}

ValidationReport Service::validate_bundle(const std::string& bundle_id) {
  auto bundle = bundles_->find(bundle_id);
  return bundles_->validation(bundle_id, runner_for(*bundle));
}

json Service::assess_suite(const std::string& bundle_id, const std::vector<MutationOperator>& ops,
                           std::optional<std::size_t> limit, std::uint64_t seed, double threshold) {
  auto bundle = bundles_->find(bundle_id);
  auto mutants = generate_mutants(bundle->reference_source, ops, limit, seed);
  AssessOptions opt;
  opt.threshold = threshold;
  auto a = sidb::assess_suite(*bundle, mutants, runner_for(*bundle), opt);
  return to_json(a, mutants);
}

CustomTestReport Service::check_custom_tests(const std::string& session_id, const std::vector<TestCase>& tests) {
  auto s = get(session_id);
  auto bundle = bundles_->find(s.bundle_id);
  return validate_custom_tests(*bundle, tests, runner_for(*bundle));
}

json Service::view(const Session& s) const {
  auto bundle = bundles_->find(s.bundle_id);
  json v = to_json(s);
  v.erase("schema");
  v["mode"] = to_string(s.dialogue.mode);
  v["level"] = s.dialogue.level;
  v["solved"] = s.dialogue.solved;
  json tests = json::array();
  for (const auto& t : bundle->tests) {
    json entry{{"id", t.id}, {"visibility", to_string(t.visibility)}, {"status", nullptr}};
    if (s.artifacts.report) {
      if (const auto* r = s.artifacts.report->find(t.id)) entry["status"] = to_string(r->status);
    }
    tests.push_back(entry);
  }
  v["tests"] = tests;
  auto& report = v["artifacts"]["report"];
  if (report.is_object()) {
    for (auto& r : report["results"]) {
      const auto* t = bundle->find_test(r.at("test_id").get<std::string>());
      if (t != nullptr && t->visibility == Visibility::kPrivate) {
        r.erase("trace");
        r["covered_lines"] = json::object();
      }
    }
  }
  return v;
}

}  // namespace sidb
