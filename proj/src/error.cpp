#include "simsel/error.hpp"

namespace simsel {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation: return "validation_error";
    case ErrorCode::kGridMismatch: return "grid_mismatch";
    case ErrorCode::kEmptyOverlap: return "empty_overlap";
    case ErrorCode::kLengthMismatch: return "length_mismatch";
    case ErrorCode::kWeightOutOfRange: return "weight_out_of_range";
    case ErrorCode::kTooFewSamples: return "too_few_samples";
    case ErrorCode::kInvalidLevel: return "invalid_level";
    case ErrorCode::kInvalidTimeStep: return "invalid_time_step";
    case ErrorCode::kMalformedFile: return "malformed_file";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kCorruptStore: return "corrupt_store";
    case ErrorCode::kVersionMismatch: return "version_mismatch";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kDuplicateKey: return "duplicate_key";
    case ErrorCode::kEmptySelection: return "empty_selection";
    case ErrorCode::kUnknownAxis: return "unknown_axis";
    case ErrorCode::kMalformedClause: return "malformed_clause";
    case ErrorCode::kDuplicateAxis: return "duplicate_axis";
    case ErrorCode::kInvertedRect: return "inverted_rect";
    case ErrorCode::kDegeneratePolygon: return "degenerate_polygon";
    case ErrorCode::kInvalidProbability: return "invalid_probability";
    case ErrorCode::kStaleRecords: return "stale_records";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
  }
  return "unknown";
}

}  // namespace simsel
