#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace deeppharm {

// Every failure raised by the core carries one of these codes. The C API
// maps them one-to-one onto dp_status values.
enum class ErrorCode {
  kIo = 1,
  kMissingColumn,
  kNonNumericCell,
  kRangeViolation,
  kDuplicateId,
  kNoLabels,
  kAlreadyNormalized,
  kResultOutOfRange,
  kEmptyInput,
  kUnbalancedBranch,
  kUnmatchedRingClosure,
  kUnknownElement,
  kValenceViolation,
  kSmilesSyntax,
  kBadRadius,
  kBadWidth,
  kNotStandardized,
  kNotNormalized,
  kTooFewRecords,
  kEmptySubsetForTask,
  kBadGroupCount,
  kBadSpec,
  kShapeMismatch,
  kNonBinaryLabel,
  kEmptyTrainingSet,
  kVersionMismatch,
  kCorruptFile,
  kIncompatiblePretrained,
  kNoMemberForTask,
  kEmptyValidationTask,
  kKTooLarge,
  kNoPositives,
  kEmptyTask,
  kConfigError,
  kMissingArtifact,
  kInvalidArgument,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace deeppharm
