#pragma once

#include <stdexcept>
#include <string>

namespace adc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension mismatch between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Input that violates a documented precondition or invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss, gradient or parameter.
class NumericsError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text (JSON, JSONL, config).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// File system failures; carries the offending path in the message.
class IoError : public Error {
 public:
  using Error::Error;
};

inline std::string shape_string(long rows, long cols) {
  return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

}  // namespace adc
