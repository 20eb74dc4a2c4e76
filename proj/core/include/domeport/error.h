#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace domeport {

enum class ErrorCode {
  kInvalidArgument,
  // core-geometry
  kTotalInternalReflection,
  kNoIntersection,
  kAmbiguousTangent,
  kCenteredCamera,
  // projection
  kBehindCamera,
  kNoPhysicalRoot,
  kDegenerate,
  kNonConvergence,
  // direct solver
  kInsufficientCorrespondences,
  kDegenerateConfiguration,
  kAllDegenerate,
  // calibration
  kRayParallelToBoard,
  kPlanarDegeneracy,
  kDivergedOutsideDome,
  kLengthMismatch,
  // simkit
  kPoseSamplingExhausted,
  kThetaUnreachable,
  // file formats
  kSchemaViolation,
  kIo,
};

std::string_view ErrorCodeName(ErrorCode code);

// True for failures caused by bad input (files, arguments), false for
// numerical failures (degenerate data, non-convergence, geometry misses).
bool IsInputError(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void Throw(ErrorCode code, const std::string& message);

}  // namespace domeport
