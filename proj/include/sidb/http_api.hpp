#pragma once

#include <memory>
#include <string>

#include "sidb/error.hpp"
#include "sidb/service.hpp"

namespace sidb {

/// HTTP status used for an engine error code.
int http_status_for(ErrorCode code);

/// JSON-over-HTTP front end for a Service. Routes:
///   POST /bundles/validate               {bundle_id} | {path}
///   POST /sessions                       {bundle_id, submission, mode?}
///   GET  /sessions/{id}
///   PUT  /sessions/{id}/submission       {source}
///   POST /sessions/{id}/run
///   POST /sessions/{id}/hint
///   POST /sessions/{id}/chat             {text}
///   GET  /sessions/{id}/plan
///   GET  /sessions/{id}/trace/{test}
///   POST /bundles/{id}/assess-suite      {operators, limit, seed, threshold}
///   POST /sessions/{id}/custom-tests     {tests}
/// Errors come back as {"error": {"code", "message"}}.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds without serving. Port 0 picks a free port; returns the bound
  /// port, or -1 on failure.
  int bind(const std::string& host, int port);
  /// Serves until stop(); blocks.
  bool listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace sidb
