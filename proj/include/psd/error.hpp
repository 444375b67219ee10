#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace psd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition (unit-norm dictionary, tol > 0, ...) is violated.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A problem is too large for an enumeration routine, or a window does not fit.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// Empty or inconsistent user data.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A dictionary column collapsed to zero and cannot be rescaled.
class DegenerateColumnError : public Error {
 public:
  DegenerateColumnError(std::size_t column, const std::string& what)
      : Error(what), column_(column) {}
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

/// Malformed binary input. `offset` is the byte position where decoding failed.
class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace psd
