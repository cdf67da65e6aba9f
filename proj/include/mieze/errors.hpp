#pragma once

#include <stdexcept>
#include <string>

namespace mieze {

// Base of every error raised by the library. The CLI maps subclasses to exit
// codes (see commands.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite or out-of-domain argument.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A state expected to be normalized is not.
class NormalizationError : public Error {
 public:
  using Error::Error;
};

// Data carries no information (e.g. all counts zero).
class DegenerateData : public Error {
 public:
  using Error::Error;
};

// Parameter set violates a documented invariant.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

// The geometry cannot focus: f2 <= f1, or the focusing distance is not
// positive.
class InfeasibleGeometry : public ConfigurationError {
 public:
  using ConfigurationError::ConfigurationError;
};

// Quadrature grid too coarse for the phase it has to resolve.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  FitError(const std::string& what, std::string diagnostics = {})
      : Error(what), diagnostics_(std::move(diagnostics)) {}

  const std::string& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::string diagnostics_;
};

}  // namespace mieze
