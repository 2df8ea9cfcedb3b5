#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace trimode {

enum class Errc {
  // configuration / input validation
  InvalidConfig,
  InvalidParams,
  DimensionMismatch,
  IndexOutOfRange,
  InvalidPartition,
  LengthMismatch,
  // physics
  NonPairedSpectrum,
  UnphysicalState,
  UnphysicalReduction,
  ZeroTemperature,
  NoPositiveRoot,
  GaugeViolation,
  InconsistentVerdicts,
  UnstableSystem,
  SingularSystem,
  SingularDrift,
  // I/O
  Io,
};

enum class ErrorCategory { Config, Physics, Io };

constexpr std::string_view to_string(Errc e) {
  switch (e) {
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::InvalidPartition: return "InvalidPartition";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::NonPairedSpectrum: return "NonPairedSpectrum";
    case Errc::UnphysicalState: return "UnphysicalState";
    case Errc::UnphysicalReduction: return "UnphysicalReduction";
    case Errc::ZeroTemperature: return "ZeroTemperature";
    case Errc::NoPositiveRoot: return "NoPositiveRoot";
    case Errc::GaugeViolation: return "GaugeViolation";
    case Errc::InconsistentVerdicts: return "InconsistentVerdicts";
    case Errc::UnstableSystem: return "UnstableSystem";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::SingularDrift: return "SingularDrift";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

constexpr ErrorCategory category(Errc e) {
  switch (e) {
    case Errc::InvalidConfig:
    case Errc::InvalidParams:
    case Errc::DimensionMismatch:
    case Errc::IndexOutOfRange:
    case Errc::InvalidPartition:
    case Errc::LengthMismatch:
      return ErrorCategory::Config;
    case Errc::Io:
      return ErrorCategory::Io;
    default:
      return ErrorCategory::Physics;
  }
}

/// Single exception type for the library; `code()` tells callers what failed.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return trimode::category(code_); }

 private:
  Errc code_;
};

}  // namespace trimode
