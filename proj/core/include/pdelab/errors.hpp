#pragma once

#include <stdexcept>
#include <string>

namespace pdelab {

// Base class for every error raised by the library. Callers that do not care
// about the specific failure can catch this one.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidStencil : public Error {
 public:
  using Error::Error;
};

class CflViolation : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

class StabilityBudgetExceeded : public Error {
 public:
  using Error::Error;
};

class FitWindowError : public Error {
 public:
  using Error::Error;
};

class DegenerateEstimator : public Error {
 public:
  using Error::Error;
};

class Divergence : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TimerResolution : public Error {
 public:
  using Error::Error;
};

}  // namespace pdelab
