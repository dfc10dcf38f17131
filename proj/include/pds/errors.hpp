#pragma once
// Exception hierarchy. The CLI maps each family to an exit code:
// UsageError -> 2, DataError (and subclasses) -> 3, InvariantError -> 4.

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pds {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

// Bad input data: malformed files, inconsistent dimensions, empty sets.
class DataError : public Error {
 public:
  using Error::Error;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

class UnsupportedVersionError : public FormatError {
 public:
  explicit UnsupportedVersionError(long long version)
      : FormatError("unsupported format_version " + std::to_string(version)), version_(version) {}
  long long version() const noexcept { return version_; }

 private:
  long long version_;
};

// A malformed or inconsistent line in a JSONL file; line numbers are 1-based.
class ParseError : public FormatError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : FormatError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DimensionError : public DataError {
 public:
  DimensionError(std::size_t expected, std::size_t got, const std::string& context)
      : DataError(context + ": expected dimension " + std::to_string(expected) + ", got " +
                  std::to_string(got)) {}
};

// An internal consistency check failed; indicates a bug, not bad input.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace pds
