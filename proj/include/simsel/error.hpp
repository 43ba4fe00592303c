#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace simsel {

enum class ErrorCode {
  kValidation,
  kGridMismatch,
  kEmptyOverlap,
  kLengthMismatch,
  kWeightOutOfRange,
  kTooFewSamples,
  kInvalidLevel,
  kInvalidTimeStep,
  kMalformedFile,
  kIo,
  kCorruptStore,
  kVersionMismatch,
  kNotFound,
  kDuplicateKey,
  kEmptySelection,
  kUnknownAxis,
  kMalformedClause,
  kDuplicateAxis,
  kInvertedRect,
  kDegeneratePolygon,
  kInvalidProbability,
  kStaleRecords,
  kInvalidArgument,
};

// Stable machine-readable name, used in API error bodies and CLI error lines.
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> position = std::nullopt)
      : std::runtime_error(message), code_(code), position_(position) {}

  ErrorCode code() const noexcept { return code_; }
  // Character offset into the parsed input, for grammar errors.
  std::optional<std::size_t> position() const noexcept { return position_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> position_;
};

}  // namespace simsel
