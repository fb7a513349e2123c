#pragma once

#include <stdexcept>
#include <string>

namespace touchdigits {

// Base for every error raised by the library. `code` is a short
// machine-readable identifier surfaced by the CLI and the HTTP service.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& message) : Error("shape_mismatch", message) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& message)
      : Error("invalid_argument", message) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& message) : Error("non_finite", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io_error", message) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& message) : Error("format_error", message) {}
};

}  // namespace touchdigits
