#include "domeport/error.h"

namespace domeport {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kTotalInternalReflection: return "TotalInternalReflection";
    case ErrorCode::kNoIntersection: return "NoIntersection";
    case ErrorCode::kAmbiguousTangent: return "AmbiguousTangent";
    case ErrorCode::kCenteredCamera: return "CenteredCamera";
    case ErrorCode::kBehindCamera: return "BehindCamera";
    case ErrorCode::kNoPhysicalRoot: return "NoPhysicalRoot";
    case ErrorCode::kDegenerate: return "Degenerate";
    case ErrorCode::kNonConvergence: return "NonConvergence";
    case ErrorCode::kInsufficientCorrespondences: return "InsufficientCorrespondences";
    case ErrorCode::kDegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::kAllDegenerate: return "AllDegenerate";
    case ErrorCode::kRayParallelToBoard: return "RayParallelToBoard";
    case ErrorCode::kPlanarDegeneracy: return "PlanarDegeneracy";
    case ErrorCode::kDivergedOutsideDome: return "DivergedOutsideDome";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kPoseSamplingExhausted: return "PoseSamplingExhausted";
    case ErrorCode::kThetaUnreachable: return "ThetaUnreachable";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

bool IsInputError(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kSchemaViolation:
    case ErrorCode::kIo:
    case ErrorCode::kLengthMismatch:
    case ErrorCode::kInsufficientCorrespondences:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code) {}

void Throw(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace domeport
