#include "sidb/http_api.hpp"

#include "httplib.h"
#include "sidb/mutation.hpp"

namespace sidb {

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSessionNotFound:
    case ErrorCode::kBundleNotFound:
    case ErrorCode::kNoTrace:
      return 404;
    case ErrorCode::kPrivateTest:
      return 403;
    case ErrorCode::kSessionSolved:
    case ErrorCode::kWrongMode:
    case ErrorCode::kMissingContext:
      return 409;
    case ErrorCode::kBundleInvalid:
      return 422;
    case ErrorCode::kRunnerUnavailable:
    case ErrorCode::kLlmUnavailable:
      return 503;
    case ErrorCode::kRunnerCrash:
    case ErrorCode::kAdapterProtocol:
    case ErrorCode::kSpawnFailure:
      return 502;
    case ErrorCode::kIo:
      return 500;
    default:
      return 400;
  }
}

namespace {

void send(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(2), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  send(res, json{{"error", {{"code", code}, {"message", message}}}}, status);
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    auto j = json::parse(req.body);
    if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "request body must be an object");
    return j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("malformed JSON body: ") + e.what());
  }
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::kInvalidArgument, std::string("missing field '") + key + "'", key);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kInvalidArgument, std::string("field '") + key + "' has the wrong type", key);
  }
}

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

// Maps engine errors onto status codes so every route fails the same way.
Handler guarded(Handler h) {
  return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
    try {
      h(req, res);
    } catch (const Error& e) {
      send_error(res, http_status_for(e.code()), error_code_name(e.code()), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, error_code_name(ErrorCode::kInvalidArgument), e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "E_INTERNAL", e.what());
    }
  };
}

}  // namespace

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;

  explicit Impl(Service& s) : service(s) { routes(); }

  void routes() {
    auto& svc = service;
    server.set_payload_max_length(8 * 1024 * 1024);

    server.Post("/bundles/validate", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
      auto body = body_of(req);
      if (body.contains("path")) {
        auto bundle = load_bundle(field<std::string>(body, "path"));
        send(res, to_json(sidb::validate_bundle(bundle, svc.runner_for(bundle))));
        return;
      }
      send(res, to_json(svc.validate_bundle(field<std::string>(body, "bundle_id"))));
    }));

    server.Post("/sessions", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
      auto body = body_of(req);
      auto bundle_id = field<std::string>(body, "bundle_id");
      auto bundle = svc.bundles().find(bundle_id);
      if (!body.contains("submission")) throw Error(ErrorCode::kInvalidArgument, "missing field 'submission'", "submission");
      auto submission = submission_from_json(body.at("submission"), *bundle);
      std::optional<DialogueMode> mode;
      if (body.contains("mode")) mode = parse_dialogue_mode(field<std::string>(body, "mode"));
      auto s = svc.create_session(bundle_id, std::move(submission), mode);
      send(res, json{{"session_id", s.session_id}}, 201);
    }));

    server.Get(R"(/sessions/([0-9a-zA-Z]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
      send(res, svc.view(svc.get(req.matches[1])));
    }));

    server.Put(R"(/sessions/([0-9a-zA-Z]+)/submission)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
      auto body = body_of(req);
      send(res, svc.view(svc.update_submission(req.matches[1], field<std::string>(body, "source"))));
    }));

    server.Post(R"(/sessions/([0-9a-zA-Z]+)/run)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
      send(res, svc.view(svc.run_and_localize(req.matches[1])));
    }));

    server.Post(R"(/sessions/([0-9a-zA-Z]+)/hint)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
      send(res, to_json(svc.next_hint(req.matches[1])));
    }));

    server.Post(R"(/sessions/([0-9a-zA-Z]+)/chat)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
      auto body = body_of(req);
      send(res, to_json(svc.chat(req.matches[1], field<std::string>(body, "text"))));
    }));

    server.Get(R"(/sessions/([0-9a-zA-Z]+)/plan)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
      send(res, to_json(svc.plan(req.matches[1])));
    }));

    server.Get(R"(/sessions/([0-9a-zA-Z]+)/trace/([^/]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
      std::string test = req.matches[2];
      json events = json::array();
      for (const auto& ev : svc.trace(req.matches[1], test)) events.push_back(to_json(ev));
      send(res, json{{"schema", "sidb.trace.v1"}, {"test_id", test}, {"events", events}});
    }));

    server.Post(R"(/bundles/([^/]+)/assess-suite)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
      auto body = body_of(req);
      std::vector<MutationOperator> ops = {MutationOperator::kAOR, MutationOperator::kROR, MutationOperator::kCRP};
      if (body.contains("operators")) {
        const auto& o = body.at("operators");
        if (o.is_string()) {
          ops = parse_mutation_operators(o.get<std::string>());
        } else {
          ops.clear();
          for (const auto& tag : o) ops.push_back(parse_mutation_operator(tag.get<std::string>()));
        }
      }
      std::optional<std::size_t> limit;
      if (body.contains("limit") && !body.at("limit").is_null()) limit = field<std::size_t>(body, "limit");
      auto seed = body.contains("seed") ? field<std::uint64_t>(body, "seed") : 0;
      auto threshold = body.contains("threshold") ? field<double>(body, "threshold") : kDefaultStrengthThreshold;
      send(res, svc.assess_suite(req.matches[1], ops, limit, seed, threshold));
    }));

    server.Post(R"(/sessions/([0-9a-zA-Z]+)/custom-tests)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
      auto body = body_of(req);
      if (!body.contains("tests") || !body.at("tests").is_array()) {
        throw Error(ErrorCode::kInvalidArgument, "field 'tests' must be a list", "tests");
      }
      std::vector<TestCase> tests;
      for (const auto& t : body.at("tests")) tests.push_back(custom_test_from_json(t));
      send(res, to_json(svc.check_custom_tests(req.matches[1], tests)));
    }));
  }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {}
HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace sidb
