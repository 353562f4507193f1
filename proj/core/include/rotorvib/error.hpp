#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rotorvib {

enum class ErrorCode {
  // ingest
  MalformedLine,
  RangeViolation,
  UnknownSensor,
  NonMonotonicTimestamp,
  Io,
  MissingSensor,
  // features
  EmptySeries,
  SeriesTooShort,
  LengthNotDivisible,
  ZeroSpectrum,
  DegenerateSpectrum,
  NonFinite,
  // pipeline
  SingleClass,
  EmptyDataset,
  EmptyMatrix,
  KTooLarge,
  EmptyMask,
  UnknownFamily,
  RankDeficient,
  LeakageViolation,
  // models
  EmptyTrainSet,
  LengthMismatch,
  Empty,
  NotTreeBased,
  PcaModelRejected,
  // synth
  ClippingProfile,
  // cli / configuration
  InvalidArgument,
  ConfigInvalid,
  SchemaMismatch,
};

/// Coarse grouping used to pick process exit codes.
enum class ErrorCategory { Config, Data, Numeric };

std::string_view to_string(ErrorCode code) noexcept;
ErrorCategory category(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return rotorvib::category(code_); }

 private:
  ErrorCode code_;
};

}  // namespace rotorvib
