#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vemrb {

/// Failure categories shared by every module. The CLI maps each one to a
/// distinct exit code.
enum class ErrorCode {
  kInvalidArgument,
  kGenerationFailure,
  kDegenerateTriangle,
  kResourceLimit,
  kAssemblyError,
  kSolverFailure,
  kOutOfDomain,
  kNumericFailure,
  kParseError,
  kLoadError,
  kNoDatabaseForN,
  kReducedSolverFailure,
  kDbNotFound,
  kFileNotFound,
  kIoError,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace vemrb
