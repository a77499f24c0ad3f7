#pragma once

#include <stdexcept>
#include <string>

namespace bioagents {

enum class ErrorCode {
  kInvalidArgument,
  kNotFound,
  kIo,
  kParse,
  kDuplicate,
  kIntegrity,
  kVersionMismatch,
  kDimensionMismatch,
  kUnavailable,
  kTimeout,
  kHttp,
  kLoopDetected,
  kScriptExhausted,
  kUnparsableRating,
  kOutOfRange,
};

const char* to_string(ErrorCode code);

// Base exception for every recoverable failure in the library. Callers that
// need to branch (CLI exit codes, HTTP status mapping) switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bioagents
