#pragma once

#include <stdexcept>
#include <string>

namespace survey {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments or configuration (bad grid, unknown tag, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown: singular systems, failed factorizations.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A request that violates a geometric precondition (indoor measurement,
/// unreachable destination, ...).
class GeometryError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace survey
