#include "sidb/error.hpp"

namespace sidb {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kManifestMissing: return "E_MANIFEST_MISSING";
    case ErrorCode::kManifestMalformed: return "E_MANIFEST_MALFORMED";
    case ErrorCode::kFileMissing: return "E_FILE_MISSING";
    case ErrorCode::kRunnerUnavailable: return "E_RUNNER_UNAVAILABLE";
    case ErrorCode::kRunnerCrash: return "E_RUNNER_CRASH";
    case ErrorCode::kAdapterProtocol: return "E_ADAPTER_PROTOCOL";
    case ErrorCode::kSpawnFailure: return "E_SPAWN_FAILURE";
    case ErrorCode::kTestSetMismatch: return "E_TEST_SET_MISMATCH";
    case ErrorCode::kNoFailures: return "E_NO_FAILURES";
    case ErrorCode::kEmptyRanking: return "E_EMPTY_RANKING";
    case ErrorCode::kNoTrace: return "E_NO_TRACE";
    case ErrorCode::kUnlexableSource: return "E_UNLEXABLE_SOURCE";
    case ErrorCode::kNoMutants: return "E_NO_MUTANTS";
    case ErrorCode::kExpectedUnstructured: return "E_EXPECTED_UNSTRUCTURED";
    case ErrorCode::kSessionSolved: return "E_SESSION_SOLVED";
    case ErrorCode::kModeViolation: return "E_MODE_VIOLATION";
    case ErrorCode::kMissingContext: return "E_MISSING_CONTEXT";
    case ErrorCode::kNotAFailure: return "E_NOT_A_FAILURE";
    case ErrorCode::kBundleNotFound: return "E_BUNDLE_NOT_FOUND";
    case ErrorCode::kBundleInvalid: return "E_BUNDLE_INVALID";
    case ErrorCode::kWrongMode: return "E_WRONG_MODE";
    case ErrorCode::kLlmUnavailable: return "E_LLM_UNAVAILABLE";
    case ErrorCode::kSessionNotFound: return "E_SESSION_NOT_FOUND";
    case ErrorCode::kSubmissionMismatch: return "E_SUBMISSION_MISMATCH";
    case ErrorCode::kPrivateTest: return "E_PRIVATE_TEST";
    case ErrorCode::kInvalidArgument: return "E_INVALID_ARGUMENT";
    case ErrorCode::kIo: return "E_IO";
  }
  return "E_UNKNOWN";
}

}  // namespace sidb
