#include "core/log.hpp"

#include <spdlog/sinks/stdout_sinks.h>

#include "core/error.hpp"

namespace mbda {

spdlog::logger& logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto sink = std::make_shared<spdlog::sinks::stderr_sink_mt>();
    auto l = std::make_shared<spdlog::logger>("mbda", sink);
    l->set_pattern("[%l] %v");
    l->set_level(spdlog::level::warn);
    return l;
  }();
  return *instance;
}

void set_log_level(spdlog::level::level_enum level) { logger().set_level(level); }

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kProtocolError: return "ProtocolError";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kEmptyFatMask: return "EmptyFatMask";
    case ErrorCode::kMissingBValue: return "MissingBValue";
    case ErrorCode::kB0Required: return "B0Required";
    case ErrorCode::kUnderDetermined: return "UnderDetermined";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kEmptyMask: return "EmptyMask";
    case ErrorCode::kGeometryError: return "GeometryError";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kSingleClassTraining: return "SingleClassTraining";
    case ErrorCode::kTooFewCases: return "TooFewCases";
    case ErrorCode::kSingleClass: return "SingleClass";
    case ErrorCode::kLabelMismatch: return "LabelMismatch";
    case ErrorCode::kInvalidP: return "InvalidP";
    case ErrorCode::kValidationError: return "ValidationError";
  }
  return "Unknown";
}

}  // namespace mbda
