#include "vemrb/error.hpp"

namespace vemrb {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kGenerationFailure: return "generation-failure";
    case ErrorCode::kDegenerateTriangle: return "degenerate-triangle";
    case ErrorCode::kResourceLimit: return "resource-limit";
    case ErrorCode::kAssemblyError: return "assembly-error";
    case ErrorCode::kSolverFailure: return "solver-failure";
    case ErrorCode::kOutOfDomain: return "out-of-domain";
    case ErrorCode::kNumericFailure: return "numeric-failure";
    case ErrorCode::kParseError: return "parse-error";
    case ErrorCode::kLoadError: return "load-error";
    case ErrorCode::kNoDatabaseForN: return "no-database-for-N";
    case ErrorCode::kReducedSolverFailure: return "reduced-solver-failure";
    case ErrorCode::kDbNotFound: return "db-not-found";
    case ErrorCode::kFileNotFound: return "file-not-found";
    case ErrorCode::kIoError: return "io-error";
  }
  return "unknown";
}

}  // namespace vemrb
