// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace fuzzkd {

enum class ErrorCode {
  invalid_argument = 1,
  domain = 2,
  io = 3,
  format = 4,
  diverged = 5,
  internal = 6,
};

/// Every failure raised by the core library. The C API maps `code()` onto its
/// status values one-to-one.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_domain(const std::string &msg) {
  throw Error(ErrorCode::domain, msg);
}
[[noreturn]] inline void throw_invalid(const std::string &msg) {
  throw Error(ErrorCode::invalid_argument, msg);
}
[[noreturn]] inline void throw_io(const std::string &msg) {
  throw Error(ErrorCode::io, msg);
}
[[noreturn]] inline void throw_format(const std::string &msg) {
  throw Error(ErrorCode::format, msg);
}

} // namespace fuzzkd
