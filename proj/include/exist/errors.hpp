#pragma once

#include <stdexcept>
#include <string>

namespace exist {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (wrong columns, bad magic, inconsistent arity).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Unknown or inconsistent label string.
class LabelError : public Error {
 public:
  using Error::Error;
};

/// Repeated identifier where uniqueness is required.
class DuplicateError : public Error {
 public:
  using Error::Error;
};

/// Collection too small or length mismatch.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// Tensor shapes do not conform.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent model or run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Argument outside a function's mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Read/write failure, including truncated binary payloads.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace exist
