#pragma once

#include <stdexcept>
#include <string>

namespace lsld {

/// Broad failure classes. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
  validation,  // bad configuration or arguments
  format,      // malformed or inconsistent data on disk
  numeric,     // non-finite values during computation
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::validation, what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what)
      : Error(ErrorKind::format, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ErrorKind::numeric, what) {}
};

}  // namespace lsld
