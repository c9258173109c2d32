#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace calasso {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text; `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A configuration value is outside its valid domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A virtual processor touched a column it does not own.
class OwnershipError : public Error {
 public:
  using Error::Error;
};

/// The SPMD phase discipline was broken (e.g. a collective issued inside a local phase).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Relative error against a zero reference solution.
class UndefinedReferenceError : public Error {
 public:
  using Error::Error;
};

/// The reference solver did not reach its optimality tolerance.
class ReferenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace calasso
