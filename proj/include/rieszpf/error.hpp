#pragma once

#include <stdexcept>
#include <string>

namespace rieszpf {

enum class ErrorCode {
  invalid_parameter,
  non_positive_bracket,
  degenerate_distance,
  too_few_points,
  empty_reference,
  dimension_mismatch,
  dimension_unsupported,
  degenerate_density,
  no_valid_candidate,
  budget_exhausted,
  unnormalized_weights,
  all_weights_zero,
  length_mismatch,
  series_too_short,
  burn_in_too_large,
  missing_column,
  non_positive_price,
  empty_file,
  io_error,
  config_error,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_parameter: return "InvalidParameter";
    case ErrorCode::non_positive_bracket: return "NonPositiveBracket";
    case ErrorCode::degenerate_distance: return "DegenerateDistance";
    case ErrorCode::too_few_points: return "TooFewPoints";
    case ErrorCode::empty_reference: return "EmptyReference";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::dimension_unsupported: return "DimensionUnsupported";
    case ErrorCode::degenerate_density: return "DegenerateDensity";
    case ErrorCode::no_valid_candidate: return "NoValidCandidate";
    case ErrorCode::budget_exhausted: return "BudgetExhausted";
    case ErrorCode::unnormalized_weights: return "UnnormalizedWeights";
    case ErrorCode::all_weights_zero: return "AllWeightsZero";
    case ErrorCode::length_mismatch: return "LengthMismatch";
    case ErrorCode::series_too_short: return "SeriesTooShort";
    case ErrorCode::burn_in_too_large: return "BurnInTooLarge";
    case ErrorCode::missing_column: return "MissingColumn";
    case ErrorCode::non_positive_price: return "NonPositivePrice";
    case ErrorCode::empty_file: return "EmptyFile";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::config_error: return "ConfigError";
  }
  return "Unknown";
}

/// Process exit status for an error: 2 config, 3 data, 4 numerical.
inline int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_parameter:
    case ErrorCode::config_error:
    case ErrorCode::burn_in_too_large:
      return 2;
    case ErrorCode::missing_column:
    case ErrorCode::non_positive_price:
    case ErrorCode::empty_file:
    case ErrorCode::io_error:
    case ErrorCode::series_too_short:
      return 3;
    default:
      return 4;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace rieszpf
