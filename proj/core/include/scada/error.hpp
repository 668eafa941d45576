#pragma once

#include <stdexcept>
#include <string>

namespace scada {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad shape, out-of-range class, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An experiment configuration is malformed or inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A loss became NaN or infinite during optimization. The message carries a
/// diagnostic snapshot of the step that failed.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Rescaling is undefined because the forget class holds all of the mass.
class DegenerateLabelError : public Error {
 public:
  using Error::Error;
};

}  // namespace scada
