#pragma once

#include <stdexcept>
#include <string>

namespace spatial {

enum class ErrorCode {
  EmptyDataset,
  DuplicateLocation,
  DimensionMismatch,
  InvalidParameter,
  InvalidWindow,
  ZeroResolution,
  SingularCovariance,
  NegativeDistance,
  InsufficientData,
  TooFewBins,
  FitDiverged,
  SingularSystem,
  RankDeficientTrend,
  TooFewObservations,
  ZeroSize,
  AsymmetricPrecision,
  NotPositiveDefinite,
  NotBipartite,
  NegativeIntensity,
  UnboundedIntensity,
  RegionOutsideWindow,
  TooFewPoints,
  TooFewSimulations,
  RadiusTooLarge,
  GridTooCoarse,
  SingularNeighborBlock,
  NonPositiveInnovationCovariance,
  EmptyMap,
  IoError,
  ConfigError,
};

const char* to_string(ErrorCode code) noexcept;

/// Every library failure is reported through this type; `code()` is the
/// stable identifier, `what()` is "<Code>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace spatial
