#include "specaug/error.hpp"

namespace specaug {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MismatchedBandCount: return "mismatched_band_count";
    case ErrorCode::EmptyClass: return "empty_class";
    case ErrorCode::NonFiniteValue: return "non_finite_value";
    case ErrorCode::TooFewClasses: return "too_few_classes";
    case ErrorCode::DuplicateMaterial: return "duplicate_material";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::DegenerateColumns: return "degenerate_columns";
    case ErrorCode::CombinationOverflow: return "combination_overflow";
    case ErrorCode::InvalidDimensions: return "invalid_dimensions";
    case ErrorCode::NonFiniteLoss: return "non_finite_loss";
    case ErrorCode::ModelMismatch: return "model_mismatch";
    case ErrorCode::ShapeMismatch: return "shape_mismatch";
    case ErrorCode::InsufficientRuns: return "insufficient_runs";
    case ErrorCode::SimplexViolation: return "simplex_violation";
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::InvalidConfig: return "invalid_config";
    case ErrorCode::ParseError: return "parse_error";
    case ErrorCode::IoError: return "io_error";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message,
             std::optional<ValueLocation> location)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      location_(location) {}

}  // namespace specaug
