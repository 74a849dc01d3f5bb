#pragma once

#include <stdexcept>
#include <string>

namespace qwsearch {

/// Out-of-range coordinate, malformed grid size, or any other precondition
/// violation on the inputs of a pure function.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inconsistent SearchConfig (negative couplings, dt above the RK4 budget...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Norm drift beyond the per-step budget; carries the simulation time at
/// which the failing step started.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double time)
      : std::runtime_error(what + " (t = " + std::to_string(time) + ")"), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// E(1 + c g delta) vanished: the two-level coupling is switched off.
class DegenerateCouplingError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// No rescaling strength c satisfies c_min < c < c_max.
class InfeasibleCouplingError : public std::domain_error {
 public:
  InfeasibleCouplingError(const std::string& what, double c_min, double c_max)
      : std::domain_error(what), c_min_(c_min), c_max_(c_max) {}

  double c_min() const noexcept { return c_min_; }
  double c_max() const noexcept { return c_max_; }

 private:
  double c_min_;
  double c_max_;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Half-maximum crossings of a peak are not bracketed by the samples.
class WidthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FixedPointError : public std::runtime_error {
 public:
  FixedPointError(const std::string& what, double time)
      : std::runtime_error(what + " (t = " + std::to_string(time) + ")"), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// The linear and nonlinear periods do not separate (T1 >= T0), so the
/// leading-order transition-time estimate has no meaning.
class RegimeOverlapError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace qwsearch
