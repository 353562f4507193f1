#include "rotorvib/error.hpp"

namespace rotorvib {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::RangeViolation: return "RangeViolation";
    case ErrorCode::UnknownSensor: return "UnknownSensor";
    case ErrorCode::NonMonotonicTimestamp: return "NonMonotonicTimestamp";
    case ErrorCode::Io: return "Io";
    case ErrorCode::MissingSensor: return "MissingSensor";
    case ErrorCode::EmptySeries: return "EmptySeries";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::LengthNotDivisible: return "LengthNotDivisible";
    case ErrorCode::ZeroSpectrum: return "ZeroSpectrum";
    case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::UnknownFamily: return "UnknownFamily";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::LeakageViolation: return "LeakageViolation";
    case ErrorCode::EmptyTrainSet: return "EmptyTrainSet";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::NotTreeBased: return "NotTreeBased";
    case ErrorCode::PcaModelRejected: return "PcaModelRejected";
    case ErrorCode::ClippingProfile: return "ClippingProfile";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
  }
  return "Unknown";
}

ErrorCategory category(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::ConfigInvalid:
    case ErrorCode::UnknownFamily:
    case ErrorCode::KTooLarge:
    case ErrorCode::EmptyMask:
    case ErrorCode::NotTreeBased:
    case ErrorCode::PcaModelRejected:
    case ErrorCode::ClippingProfile:
      return ErrorCategory::Config;
    case ErrorCode::ZeroSpectrum:
    case ErrorCode::DegenerateSpectrum:
    case ErrorCode::NonFinite:
    case ErrorCode::RankDeficient:
      return ErrorCategory::Numeric;
    default:
      return ErrorCategory::Data;
  }
}

}  // namespace rotorvib
