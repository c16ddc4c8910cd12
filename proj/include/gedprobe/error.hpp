#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gedprobe {

// Exit-code classes used by the CLI: data errors map to 2, integrity errors to 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A minimal pair that does not differ in exactly one position.
class InvariantError : public DataError {
 public:
  using DataError::DataError;
};

class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gedprobe
