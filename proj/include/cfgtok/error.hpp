#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cfgtok {

enum class ErrorCode {
  invalid_argument,
  invalid_depth,
  behind_camera,
  dim_mismatch,
  shape_mismatch,
  missing_reference,
  empty_scene,
  empty_corpus,
  io_error,
  parse_error,
  numeric_validation,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::invalid_depth: return "invalid-depth";
    case ErrorCode::behind_camera: return "behind-camera";
    case ErrorCode::dim_mismatch: return "dim-mismatch";
    case ErrorCode::shape_mismatch: return "shape-mismatch";
    case ErrorCode::missing_reference: return "missing-reference";
    case ErrorCode::empty_scene: return "empty-scene";
    case ErrorCode::empty_corpus: return "empty-corpus";
    case ErrorCode::io_error: return "io-error";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::numeric_validation: return "numeric-validation";
  }
  return "unknown";
}

/// Exception carrying one of the library error codes. what() is
/// "<code>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code), detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace cfgtok
