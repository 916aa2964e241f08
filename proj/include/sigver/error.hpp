#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sigver {

enum class ErrorCode {
  kInvalidArgument,
  kInfeasibleMatrix,
  kInsufficientData,
  kTooFewReferences,
  kZeroDelta,
  kEmptyScoreList,
  kInsufficientGenuines,
  kDegenerateUser,
  kMissingFile,
  kMalformedManifest,
  kIoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInfeasibleMatrix: return "InfeasibleMatrix";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kTooFewReferences: return "TooFewReferences";
    case ErrorCode::kZeroDelta: return "ZeroDelta";
    case ErrorCode::kEmptyScoreList: return "EmptyScoreList";
    case ErrorCode::kInsufficientGenuines: return "InsufficientGenuines";
    case ErrorCode::kDegenerateUser: return "DegenerateUser";
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kMalformedManifest: return "MalformedManifest";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sigver
