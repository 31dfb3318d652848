#ifndef HALFCAR_ERRORS_HPP
#define HALFCAR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace halfcar {

/// Base class for all halfcar errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite or otherwise malformed numeric input.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// State outside the model's validity region (|pitch| >= pi/2).
class ModelValidityError : public Error {
 public:
  using Error::Error;
};

/// Degenerate parameters admit no static rest point.
class NoEquilibriumError : public Error {
 public:
  using Error::Error;
};

/// Signal evaluated outside its validity window.
class OutOfWindowError : public Error {
 public:
  using Error::Error;
};

/// Configuration value out of range or inconsistent.
class InvalidConfigError : public Error {
 public:
  using Error::Error;
};

/// Too few samples to build a signal.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Closed-loop scheduler asked for data it does not have yet.
class SchedulingError : public Error {
 public:
  using Error::Error;
};

/// Sensitivity system is singular at the solution.
class SensitivityUnavailableError : public Error {
 public:
  using Error::Error;
};

/// Sensitivity update requested on a non-regular bundle.
class UpdateRefusedError : public Error {
 public:
  using Error::Error;
};

}  // namespace halfcar

#endif  // HALFCAR_ERRORS_HPP
