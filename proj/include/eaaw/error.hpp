#pragma once

#include <stdexcept>
#include <string>

namespace eaaw {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape of an operand does not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Index (label, token, position) out of range.
class IndexError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Empty or malformed input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Bad file magic, version, or truncation. Carries a byte offset when known.
class FormatError : public Error {
 public:
  using Error::Error;
  FormatError(const std::string& what, long offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")") {}
};

// Singular systems, divergence, non-finite values.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Operation called in the wrong order (e.g. backward before forward).
class StateError : public Error {
 public:
  using Error::Error;
};

// Invalid payload (non-binary bitmap cell, single-signed watermark).
class CodecError : public Error {
 public:
  using Error::Error;
};

}  // namespace eaaw
