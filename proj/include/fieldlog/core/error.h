#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fieldlog {

// Every failure the service can report. Server responses map these 1:1.
enum class ErrorCode {
  Validation,
  NotFound,
  Conflict,
  TranscriptionFailed,
  NoZone,
  Internal,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string field_path = {})
      : std::runtime_error(std::move(message)),
        code_(code),
        field_path_(std::move(field_path)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& field_path() const noexcept { return field_path_; }

 private:
  ErrorCode code_;
  std::string field_path_;
};

[[noreturn]] inline void fail_validation(std::string message, std::string field_path = {}) {
  throw Error(ErrorCode::Validation, std::move(message), std::move(field_path));
}

[[noreturn]] inline void fail_not_found(std::string message) {
  throw Error(ErrorCode::NotFound, std::move(message));
}

}  // namespace fieldlog
