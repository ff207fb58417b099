#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sidb {

enum class ErrorCode {
  kManifestMissing,
  kManifestMalformed,
  kFileMissing,
  kRunnerUnavailable,
  kRunnerCrash,
  kAdapterProtocol,
  kSpawnFailure,
  kTestSetMismatch,
  kNoFailures,
  kEmptyRanking,
  kNoTrace,
  kUnlexableSource,
  kNoMutants,
  kExpectedUnstructured,
  kSessionSolved,
  kModeViolation,
  kMissingContext,
  kNotAFailure,
  kBundleNotFound,
  kBundleInvalid,
  kWrongMode,
  kLlmUnavailable,
  kSessionNotFound,
  kSubmissionMismatch,
  kPrivateTest,
  kInvalidArgument,
  kIo,
};

/// Stable wire name, e.g. "E_MANIFEST_MISSING".
std::string_view error_code_name(ErrorCode code);

/// Every engine failure surfaces as an Error carrying a stable code. `subject`
/// names the offending field, path or id when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string subject = {})
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        subject_(std::move(subject)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& subject() const noexcept { return subject_; }

 private:
  ErrorCode code_;
  std::string subject_;
};

}  // namespace sidb
