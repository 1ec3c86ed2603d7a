#include "core/error.hpp"

namespace deeppharm {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kMissingColumn: return "MissingColumn";
    case ErrorCode::kNonNumericCell: return "NonNumericCell";
    case ErrorCode::kRangeViolation: return "RangeViolation";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kNoLabels: return "NoLabels";
    case ErrorCode::kAlreadyNormalized: return "AlreadyNormalized";
    case ErrorCode::kResultOutOfRange: return "ResultOutOfRange";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kUnbalancedBranch: return "UnbalancedBranch";
    case ErrorCode::kUnmatchedRingClosure: return "UnmatchedRingClosure";
    case ErrorCode::kUnknownElement: return "UnknownElement";
    case ErrorCode::kValenceViolation: return "ValenceViolation";
    case ErrorCode::kSmilesSyntax: return "SmilesSyntax";
    case ErrorCode::kBadRadius: return "BadRadius";
    case ErrorCode::kBadWidth: return "BadWidth";
    case ErrorCode::kNotStandardized: return "NotStandardized";
    case ErrorCode::kNotNormalized: return "NotNormalized";
    case ErrorCode::kTooFewRecords: return "TooFewRecords";
    case ErrorCode::kEmptySubsetForTask: return "EmptySubsetForTask";
    case ErrorCode::kBadGroupCount: return "BadGroupCount";
    case ErrorCode::kBadSpec: return "BadSpec";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonBinaryLabel: return "NonBinaryLabel";
    case ErrorCode::kEmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kCorruptFile: return "CorruptFile";
    case ErrorCode::kIncompatiblePretrained: return "IncompatiblePretrained";
    case ErrorCode::kNoMemberForTask: return "NoMemberForTask";
    case ErrorCode::kEmptyValidationTask: return "EmptyValidationTask";
    case ErrorCode::kKTooLarge: return "KTooLarge";
    case ErrorCode::kNoPositives: return "NoPositives";
    case ErrorCode::kEmptyTask: return "EmptyTask";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kMissingArtifact: return "MissingArtifact";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace deeppharm
