#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace motraj {

enum class ErrorCode {
  // Input / parsing.
  ParseError,
  ValidationError,
  IoError,
  InvalidConfig,
  DimensionMismatch,
  MissingMesh,
  MissingLabelMap,
  NoCommonFrames,
  FrameMissingFromGroundTruth,
  // Geometry.
  NearParallel,
  DegenerateConfiguration,
  EmptyMesh,
  // Ground approximation.
  NoGroundObservations,
  DegenerateGroundSet,
  // Scale estimation.
  EmptyObjectCloud,
  NonPositiveScale,
  IllConditionedPair,
  NoValidPairs,
  AllPairsDegenerate,
  NoValidFrames,
  // Evaluation.
  NoRayHits,
};

// Stable kebab-case name used in machine-readable diagnostics.
std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace motraj
