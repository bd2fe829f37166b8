#pragma once

#include <stdexcept>
#include <string>

namespace stopwise {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument or model was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A wealth value fell outside the utility's domain, or a utility value
/// outside its range.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An observation has zero predictive probability (or density) under the
/// current belief.
class ImpossibleObservation : public Error {
 public:
  using Error::Error;
};

/// A node, grid or path budget was exhausted.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// An advisor session already stopped and cannot take more offers.
class AdvisorStopped : public Error {
 public:
  using Error::Error;
};

/// An iterative solver hit its iteration cap. Carries the last increment.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_increment)
      : Error(what), last_increment_(last_increment) {}

  double last_increment() const noexcept { return last_increment_; }

 private:
  double last_increment_;
};

}  // namespace stopwise
