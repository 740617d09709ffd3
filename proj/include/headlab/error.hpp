#pragma once

#include <stdexcept>
#include <string>

namespace headlab {

/// Base error for every recoverable failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing or unreadable input file.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data; carries the 1-based line number when known.
class ParseError : public InputError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Invalid or unreadable configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace headlab
