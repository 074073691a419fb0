#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace protvec {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller supplied an argument outside an operation's contract.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (files, corpora, labels).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Syntax error in a text input; carries the 1-based offending line.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Non-finite values, divergence, or a singular system.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Container-file failures, kept distinct so callers can tell them apart.
class FormatVersionError : public DataError {
 public:
  using DataError::DataError;
};
class ChecksumError : public DataError {
 public:
  using DataError::DataError;
};
class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace protvec
