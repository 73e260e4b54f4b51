#pragma once

#include <stdexcept>
#include <string>

namespace mbda {

// Numeric values are mirrored by mbda_status in include/mbda/mbda.h.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kFormatError = 2,
  kProtocolError = 3,
  kDimensionMismatch = 4,
  kIoError = 5,
  kEmptyFatMask = 6,
  kMissingBValue = 7,
  kB0Required = 8,
  kUnderDetermined = 9,
  kDegenerateInput = 10,
  kEmptyMask = 11,
  kGeometryError = 12,
  kShapeMismatch = 13,
  kSingleClassTraining = 14,
  kTooFewCases = 15,
  kSingleClass = 16,
  kLabelMismatch = 17,
  kInvalidP = 18,
  kValidationError = 19,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace mbda
