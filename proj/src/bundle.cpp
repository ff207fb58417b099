#include "sidb/bundle.hpp"

#include <set>

#include "fs_util.hpp"
#include "sidb/error.hpp"

namespace sidb {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void malformed(const std::string& field, const std::string& msg) {
  throw Error(ErrorCode::kManifestMalformed, (field.empty() ? "" : field + ": ") + msg, field);
}

std::string required_string(const json& m, const char* key, const std::string& field) {
  if (!m.contains(key)) malformed(field, std::string("required field \"") + key + "\" is missing");
  if (!m.at(key).is_string()) malformed(field, std::string("\"") + key + "\" must be a string");
  auto v = m.at(key).get<std::string>();
  if (v.empty()) malformed(field, std::string("\"") + key + "\" must not be empty");
  return v;
}

std::string read_referenced(const fs::path& root, const std::string& rel) {
  auto p = root / rel;
  if (!fs::is_regular_file(p)) {
    throw Error(ErrorCode::kFileMissing, "manifest references missing file " + rel, rel);
  }
  return detail::read_file(p);
}

std::optional<ExpectedRecord> expected_from_json(const json& j, const std::string& field) {
  if (!j.contains("expected") || j.at("expected").is_null()) return std::nullopt;
  const auto& e = j.at("expected");
  if (e.is_object()) {
    if (!e.contains("input") || !e.contains("output")) malformed(field, "expected needs input and output");
    return ExpectedRecord{e.at("input").get<std::string>(), e.at("output").get<std::string>()};
  }
  malformed(field, "expected must be an object {input, output}");
}

}  // namespace

const TestCase* AssignmentBundle::find_test(std::string_view test_id) const {
  for (const auto& t : tests) {
    if (t.id == test_id) return &t;
  }
  return nullptr;
}

void AssignmentBundle::check() const {
  if (id.empty()) malformed("id", "bundle id must not be empty");
  if (tests.empty()) malformed("tests", "a bundle needs at least one test");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < tests.size(); ++i) {
    const auto& t = tests[i];
    auto field = "tests[" + std::to_string(i) + "]";
    if (t.id.empty()) malformed(field + ".id", "test id must not be empty");
    if (!ids.insert(t.id).second) malformed(field + ".id", "duplicate test id " + t.id);
    if (t.visibility == Visibility::kPrivate && t.kind != TestKind::kLecturer) {
      malformed(field + ".visibility", "only lecturer tests may be private");
    }
  }
  if (statement.size() > kStatementCap) malformed("statement_file", "statement exceeds 64 KiB");
  runner.check();
}

bool AssignmentBundle::operator==(const AssignmentBundle& o) const {
  return id == o.id && title == o.title && statement == o.statement &&
         target_runtime == o.target_runtime && entry_point == o.entry_point &&
         reference_source == o.reference_source && tests == o.tests && runner == o.runner &&
         statement_file == o.statement_file && reference_file == o.reference_file &&
         runner_config_file == o.runner_config_file;
}

AssignmentBundle load_bundle(const fs::path& root) {
  auto manifest_path = root / "bundle.json";
  if (!fs::is_regular_file(manifest_path)) {
    throw Error(ErrorCode::kManifestMissing, "no bundle.json in " + root.string(), root.string());
  }
  json m;
  try {
    m = json::parse(detail::read_file(manifest_path));
  } catch (const json::parse_error& e) {
    malformed("", std::string("bundle.json is not valid structured text: ") + e.what());
  }
  if (!m.is_object()) malformed("", "bundle.json must hold an object");
  if (m.value("schema", std::string()) != kBundleSchema) {
    malformed("schema", std::string("schema must be \"") + kBundleSchema + "\"");
  }

  AssignmentBundle b;
  b.root = root;
  b.id = required_string(m, "id", "id");
  b.title = required_string(m, "title", "title");
  b.statement_file = required_string(m, "statement_file", "statement_file");
  b.target_runtime = required_string(m, "target_runtime", "target_runtime");
  b.reference_file = required_string(m, "reference", "reference_source");
  b.entry_point = m.value("entry_point", std::string());

  if (!m.contains("tests") || !m.at("tests").is_array()) malformed("tests", "required array \"tests\" is missing");
  if (!m.contains("runner") || !m.at("runner").is_object()) malformed("runner", "required object \"runner\" is missing");

  b.statement = read_referenced(root, b.statement_file);
  b.reference_source.path = fs::path(b.reference_file).filename().string();
  b.reference_source.content = read_referenced(root, b.reference_file);

  const auto& tests = m.at("tests");
  for (std::size_t i = 0; i < tests.size(); ++i) {
    const auto& tj = tests[i];
    auto field = "tests[" + std::to_string(i) + "]";
    if (!tj.is_object()) malformed(field, "test entry must be an object");
    TestCase t;
    t.id = required_string(tj, "id", field + ".id");
    t.file = required_string(tj, "file", field + ".file");
    try {
      t.visibility = parse_visibility(tj.value("visibility", std::string("public")));
      t.kind = parse_test_kind(tj.value("kind", std::string("lecturer")));
    } catch (const Error& e) {
      malformed(field + "." + e.subject(), e.what());
    }
    t.expected = expected_from_json(tj, field + ".expected");
    t.payload = read_referenced(root, t.file);
    b.tests.push_back(std::move(t));
  }

  const auto& rj = m.at("runner");
  json runner_cfg = json::object();
  if (rj.contains("config_file")) {
    b.runner_config_file = rj.at("config_file").get<std::string>();
    try {
      runner_cfg = json::parse(read_referenced(root, b.runner_config_file));
    } catch (const json::parse_error& e) {
      malformed("runner.config_file", e.what());
    }
  } else {
    runner_cfg = rj;
  }
  if (rj.contains("adapter")) runner_cfg["adapter"] = rj.at("adapter");
  b.runner = adapter_config_from_json(runner_cfg);

  b.check();
  return b;
}

json manifest_json(const AssignmentBundle& b) {
  json tests = json::array();
  for (const auto& t : b.tests) {
    json tj{{"id", t.id}, {"visibility", to_string(t.visibility)},
            {"file", t.file.empty() ? "tests/" + t.id + ".py" : t.file}};
    if (t.kind != TestKind::kLecturer) tj["kind"] = to_string(t.kind);
    if (t.expected) tj["expected"] = json{{"input", t.expected->input}, {"output", t.expected->output}};
    tests.push_back(std::move(tj));
  }
  json runner{{"adapter", b.runner.kind == AdapterKind::kSubprocess ? "subprocess" : "replay"}};
  if (!b.runner_config_file.empty()) {
    runner["config_file"] = b.runner_config_file;
  } else {
    runner = to_json(b.runner);
  }
  json m{{"schema", kBundleSchema},
         {"id", b.id},
         {"title", b.title},
         {"statement_file", b.statement_file},
         {"target_runtime", b.target_runtime},
         {"reference", b.reference_file},
         {"tests", tests},
         {"runner", runner}};
  if (!b.entry_point.empty()) m["entry_point"] = b.entry_point;
  return m;
}

void save_bundle(const AssignmentBundle& b, const fs::path& root) {
  b.check();
  fs::create_directories(root);
  detail::write_file_atomic(root / "bundle.json", manifest_json(b).dump(2) + "\n");
  detail::write_file_atomic(root / b.statement_file, b.statement);
  detail::write_file_atomic(root / b.reference_file, b.reference_source.content);
  for (const auto& t : b.tests) {
    detail::write_file_atomic(root / (t.file.empty() ? "tests/" + t.id + ".py" : t.file), t.payload);
  }
  if (!b.runner_config_file.empty()) {
    auto cfg = to_json(b.runner);
    cfg.erase("adapter");
    detail::write_file_atomic(root / b.runner_config_file, cfg.dump(2) + "\n");
  }
}

ValidationReport validate_bundle(const AssignmentBundle& bundle, const Runner& runner) {
  if (runner.runtime() != bundle.target_runtime) {
    throw Error(ErrorCode::kRunnerUnavailable,
                "no adapter for runtime " + bundle.target_runtime + " (runner serves " + runner.runtime() + ")",
                bundle.target_runtime);
  }
  if (auto why = runner.unavailable_reason(); !why.empty()) {
    throw Error(ErrorCode::kRunnerUnavailable, why, bundle.target_runtime);
  }
  TestRunReport report;
  try {
    report = runner.run_tests(bundle.reference_source, bundle.tests, TargetLabel::reference());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kAdapterProtocol || e.code() == ErrorCode::kRunnerCrash) {
      throw Error(ErrorCode::kRunnerCrash, e.what(), e.subject());
    }
    throw;
  }
  ValidationReport v;
  for (const auto& r : report.results) {
    v.test_status[r.test_id] = r.status;
    if (r.status != TestStatus::kPassed) {
      v.issues.push_back({"REFERENCE_FAILS_TEST", Severity::kError,
                          "reference implementation does not pass test " + r.test_id + " (" +
                              std::string(to_string(r.status)) + (r.message.empty() ? "" : ": " + r.message) + ")",
                          r.test_id});
    }
  }
  v.valid = std::none_of(v.issues.begin(), v.issues.end(),
                         [](const ValidationIssue& i) { return i.severity == Severity::kError; });
  return v;
}

json to_json(const ValidationReport& r) {
  json issues = json::array();
  for (const auto& i : r.issues) {
    const char* sev = i.severity == Severity::kError ? "error" : i.severity == Severity::kWarning ? "warning" : "info";
    issues.push_back({{"code", i.code}, {"severity", sev}, {"message", i.message}, {"location", i.location}});
  }
  json tests = json::object();
  for (const auto& [id, st] : r.test_status) tests[id] = to_string(st);
  return json{{"schema", "sidb.validation.v1"}, {"valid", r.valid}, {"issues", issues}, {"tests", tests}};
}

TestCase custom_test_from_json(const json& j, const fs::path& base) {
  if (!j.is_object() || !j.contains("id") || !j.at("id").is_string()) {
    throw Error(ErrorCode::kInvalidArgument, "custom test needs a string id", "id");
  }
  TestCase t;
  t.id = j.at("id").get<std::string>();
  t.kind = TestKind::kStudentCustom;
  if (j.contains("input") || j.contains("expected")) {
    if (!j.contains("input") || !j.contains("expected") || !j.at("input").is_string() ||
        !j.at("expected").is_string()) {
      throw Error(ErrorCode::kInvalidArgument, "structured custom test " + t.id + " needs string input and expected",
                  t.id);
    }
    t.expected = ExpectedRecord{j.at("input").get<std::string>(), j.at("expected").get<std::string>()};
  } else if (j.contains("payload")) {
    t.payload = j.at("payload").get<std::string>();
  } else if (j.contains("file")) {
    t.file = j.at("file").get<std::string>();
    auto p = base / t.file;
    if (!fs::is_regular_file(p)) throw Error(ErrorCode::kFileMissing, "missing custom test file " + t.file, t.file);
    t.payload = detail::read_file(p);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "custom test " + t.id + " has no body", t.id);
  }
  return t;
}

json to_json(const TestCase& t) {
  json j{{"id", t.id}, {"kind", to_string(t.kind)}, {"visibility", to_string(t.visibility)}};
  if (t.expected) {
    j["input"] = t.expected->input;
    j["expected"] = t.expected->output;
  } else {
    j["payload"] = t.payload;
  }
  return j;
}

Submission make_submission(std::string student_id, std::string content, const AssignmentBundle& bundle) {
  Submission s;
  s.student_id = std::move(student_id);
  s.source.path = bundle.reference_source.path;
  s.source.content = std::move(content);
  return s;
}

Submission load_submission(const fs::path& path, const AssignmentBundle& bundle) {
  if (fs::is_regular_file(path)) return make_submission("anonymous", detail::read_file(path), bundle);
  auto manifest = path / "submission.json";
  if (!fs::is_regular_file(manifest)) {
    throw Error(ErrorCode::kFileMissing, "no submission.json in " + path.string(), path.string());
  }
  json j;
  try {
    j = json::parse(detail::read_file(manifest));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("submission.json: ") + e.what(), "submission.json");
  }
  auto source_rel = j.value("source", bundle.reference_source.path);
  if (fs::path(source_rel).filename().string() != bundle.reference_source.path) {
    throw Error(ErrorCode::kSubmissionMismatch,
                "submission source " + source_rel + " must be named " + bundle.reference_source.path, source_rel);
  }
  auto src = path / source_rel;
  if (!fs::is_regular_file(src)) throw Error(ErrorCode::kFileMissing, "missing submission source " + source_rel, source_rel);
  auto s = make_submission(j.value("student_id", std::string("anonymous")), detail::read_file(src), bundle);
  if (j.contains("custom_tests")) {
    for (const auto& t : j.at("custom_tests")) s.custom_tests.push_back(custom_test_from_json(t, path));
  }
  return s;
}

json to_json(const Submission& s) {
  json tests = json::array();
  for (const auto& t : s.custom_tests) tests.push_back(to_json(t));
  return json{{"student_id", s.student_id}, {"path", s.source.path}, {"source", s.source.content},
              {"custom_tests", tests}};
}

Submission submission_from_json(const json& j, const AssignmentBundle& bundle) {
  if (!j.is_object() || !j.contains("source") || !j.at("source").is_string()) {
    throw Error(ErrorCode::kInvalidArgument, "submission needs a string \"source\"", "source");
  }
  if (j.contains("path") && j.at("path").get<std::string>() != bundle.reference_source.path) {
    throw Error(ErrorCode::kSubmissionMismatch,
                "submission path must be " + bundle.reference_source.path, j.at("path").get<std::string>());
  }
  auto s = make_submission(j.value("student_id", std::string("anonymous")), j.at("source").get<std::string>(), bundle);
  if (j.contains("custom_tests")) {
    for (const auto& t : j.at("custom_tests")) s.custom_tests.push_back(custom_test_from_json(t));
  }
  return s;
}

}  // namespace sidb
