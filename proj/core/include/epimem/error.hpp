#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace epimem {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kNumerical,
  kNotInHistory,
  kIo,
  kFormat,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception. The CLI maps `code()` to a
// stable, machine-readable token on its error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace epimem
