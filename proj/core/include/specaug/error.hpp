#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace specaug {

enum class ErrorCode {
  MismatchedBandCount,
  EmptyClass,
  NonFiniteValue,
  TooFewClasses,
  DuplicateMaterial,
  DimensionMismatch,
  DegenerateColumns,
  CombinationOverflow,
  InvalidDimensions,
  NonFiniteLoss,
  ModelMismatch,
  ShapeMismatch,
  InsufficientRuns,
  SimplexViolation,
  InvalidArgument,
  InvalidConfig,
  ParseError,
  IoError,
};

/// Stable machine-readable name, e.g. "mismatched_band_count".
std::string_view to_string(ErrorCode code) noexcept;

/// Position of an offending value inside a library or image.
struct ValueLocation {
  std::size_t cls = 0;
  std::size_t member = 0;
  std::size_t band = 0;

  friend bool operator==(const ValueLocation&, const ValueLocation&) = default;
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<ValueLocation> location = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  const std::optional<ValueLocation>& location() const noexcept { return location_; }

 private:
  ErrorCode code_;
  std::optional<ValueLocation> location_;
};

}  // namespace specaug
