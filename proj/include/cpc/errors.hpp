#pragma once

#include <stdexcept>
#include <string>

namespace cpc {

// Failure taxonomy. The CLI maps these to exit codes: data/validation
// problems exit 3, numeric failures exit 4 (usage errors exit 2 and are
// raised by the flag parser, not through this type).
enum class errc {
  file_not_found,
  parse_error,
  overlapping_selectors,
  empty_selection,
  row_count_mismatch,
  index_out_of_bounds,
  duplicate_entry,
  sample_too_small,
  degenerate_pairing,
  single_class_input,
  length_mismatch,
  empty_input,
  dimension_mismatch,
  dimension_overflow,
  invalid_model,
  unknown_option,
  absolute_continuity_violated,
  non_finite_loss,
  divergence_detected,
};

inline bool is_numeric_failure(errc c) {
  return c == errc::non_finite_loss || c == errc::divergence_detected;
}

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::file_not_found: return "FileNotFound";
    case errc::parse_error: return "ParseError";
    case errc::overlapping_selectors: return "OverlappingSelectors";
    case errc::empty_selection: return "EmptySelection";
    case errc::row_count_mismatch: return "RowCountMismatch";
    case errc::index_out_of_bounds: return "IndexOutOfBounds";
    case errc::duplicate_entry: return "DuplicateEntry";
    case errc::sample_too_small: return "SampleTooSmall";
    case errc::degenerate_pairing: return "DegeneratePairing";
    case errc::single_class_input: return "SingleClassInput";
    case errc::length_mismatch: return "LengthMismatch";
    case errc::empty_input: return "EmptyInput";
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::dimension_overflow: return "DimensionOverflow";
    case errc::invalid_model: return "InvalidModel";
    case errc::unknown_option: return "UnknownOption";
    case errc::absolute_continuity_violated: return "AbsoluteContinuityViolated";
    case errc::non_finite_loss: return "NonFiniteLoss";
    case errc::divergence_detected: return "DivergenceDetected";
  }
  return "UnknownError";
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& msg) { throw error(code, msg); }

inline void require(bool ok, errc code, const std::string& msg) {
  if (!ok) fail(code, msg);
}

}  // namespace cpc
