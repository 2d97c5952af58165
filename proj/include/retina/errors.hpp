#pragma once

#include <stdexcept>
#include <string>

namespace retina {

/// Base class of all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument violates the documented precondition of an operation.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// The track does not reach the requested layer (not forward-going).
class NoIntersection : public Error {
 public:
  using Error::Error;
};

/// A configuration object failed validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed serialized input. `line()` is 1-based; 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::string field, const std::string& what)
      : Error("line " + std::to_string(line) +
              (field.empty() ? std::string() : ", field '" + field + "'") +
              ": " + what),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Two inputs that must describe the same events do not.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

}  // namespace retina
