#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ikg {

enum class ErrorCode {
  invalid_argument,
  input_error,
  provider_error,
  protocol_error,
  undefined_similarity,
  empty_matrix,
  assembly_error,
  config_error,
  io_error,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::input_error: return "input-error";
    case ErrorCode::provider_error: return "provider-error";
    case ErrorCode::protocol_error: return "protocol-error";
    case ErrorCode::undefined_similarity: return "undefined-similarity";
    case ErrorCode::empty_matrix: return "empty-matrix";
    case ErrorCode::assembly_error: return "assembly-error";
    case ErrorCode::config_error: return "config-error";
    case ErrorCode::io_error: return "io-error";
  }
  return "unknown";
}

// Every failure raised by the library carries a machine-readable code.
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

}  // namespace ikg
