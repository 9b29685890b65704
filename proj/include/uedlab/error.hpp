#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ued {

/// Base class for every error raised by the library. The C API maps each
/// subclass onto a distinct status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class InvalidLevel : public Error {
 public:
  using Error::Error;
};

/// Malformed level text. Line and column are 1-based; 0 means "whole input".
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(format(what, line, column)), line_(line), column_(column) {}

  /// Same position, message prefixed with `context` (usually a file path).
  ParseError(const std::string& context, const ParseError& inner)
      : Error(context + ": " + inner.what()), line_(inner.line_), column_(inner.column_) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t line, std::size_t column) {
    if (line == 0) return what;
    return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what;
  }

  std::size_t line_;
  std::size_t column_;
};

/// Exact transport problem larger than the configured cap.
class SizeCapExceeded : public Error {
 public:
  using Error::Error;
};

/// Iterative solver gave up. Carries the last residual.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}

  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Non-finite network output, loss or gradient.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ued
