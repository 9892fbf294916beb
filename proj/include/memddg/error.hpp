#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace memddg {

enum class ErrorCode {
  NonManifoldEdge,
  NonManifoldVertex,
  InconsistentOrientation,
  IsolatedVertex,
  InvalidIndex,
  DegenerateFace,
  NonPlanarBoundary,
  ZeroNormal,
  DisconnectedComponent,
  OutOfRangePhi,
  MissingPreferredArea,
  NonPositiveVolume,
  MissingReference,
  UnassignedLoop,
  LineSearchFailed,
  PhiOutOfBounds,
  WouldBreakManifold,
  UnknownPreset,
  InvalidParams,
  ParseError,
  UnknownKey,
  TypeError,
  MissingRequired,
  LengthMismatch,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
  case ErrorCode::NonManifoldEdge: return "NonManifoldEdge";
  case ErrorCode::NonManifoldVertex: return "NonManifoldVertex";
  case ErrorCode::InconsistentOrientation: return "InconsistentOrientation";
  case ErrorCode::IsolatedVertex: return "IsolatedVertex";
  case ErrorCode::InvalidIndex: return "InvalidIndex";
  case ErrorCode::DegenerateFace: return "DegenerateFace";
  case ErrorCode::NonPlanarBoundary: return "NonPlanarBoundary";
  case ErrorCode::ZeroNormal: return "ZeroNormal";
  case ErrorCode::DisconnectedComponent: return "DisconnectedComponent";
  case ErrorCode::OutOfRangePhi: return "OutOfRangePhi";
  case ErrorCode::MissingPreferredArea: return "MissingPreferredArea";
  case ErrorCode::NonPositiveVolume: return "NonPositiveVolume";
  case ErrorCode::MissingReference: return "MissingReference";
  case ErrorCode::UnassignedLoop: return "UnassignedLoop";
  case ErrorCode::LineSearchFailed: return "LineSearchFailed";
  case ErrorCode::PhiOutOfBounds: return "PhiOutOfBounds";
  case ErrorCode::WouldBreakManifold: return "WouldBreakManifold";
  case ErrorCode::UnknownPreset: return "UnknownPreset";
  case ErrorCode::InvalidParams: return "InvalidParams";
  case ErrorCode::ParseError: return "ParseError";
  case ErrorCode::UnknownKey: return "UnknownKey";
  case ErrorCode::TypeError: return "TypeError";
  case ErrorCode::MissingRequired: return "MissingRequired";
  case ErrorCode::LengthMismatch: return "LengthMismatch";
  case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Library-wide exception. `code()` is stable and machine-parseable; the
/// message carries the human-readable context (file/line, element index).
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

} // namespace memddg
