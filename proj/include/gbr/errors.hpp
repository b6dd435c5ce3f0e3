#pragma once

#include <stdexcept>
#include <string>

namespace gbr {

/// A driver-evader pair (or agent pair) got close enough to make the
/// interaction kernels blow up. Carries the offending indices and the time.
class SingularityError : public std::runtime_error {
 public:
  SingularityError(std::string what, int driver, int evader, double t)
      : std::runtime_error(std::move(what)), driver_index(driver), evader_index(evader), time(t) {}
  int driver_index;
  int evader_index;
  double time;
};

/// A state or adjoint variable became non-finite during integration.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::string what, double t)
      : std::runtime_error(std::move(what)), last_valid_time(t) {}
  double last_valid_time;
};

/// A kernel set violates the structural assumptions (sign pattern, bounds).
class KernelError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Configuration file could not be parsed or failed validation.
class ScenarioError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace gbr
