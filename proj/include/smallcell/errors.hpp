#pragma once

#include <stdexcept>
#include <string>

namespace smallcell {

/// Invalid configuration or violated domain invariant, detected eagerly.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A closed-form expression left its validity regime (e.g. a probability
/// landed outside [0,1]). Carries the offending value so callers can report
/// which quantity broke the approximation.
class RegimeViolation : public std::runtime_error {
 public:
  RegimeViolation(const std::string& what, double offending_value)
      : std::runtime_error(what), offending_value_(offending_value) {}
  double offending_value() const noexcept { return offending_value_; }

 private:
  double offending_value_;
};

/// The per-cell handover byte budget cannot be sustained: the load-factor
/// denominator is non-positive for some speed (or speed class).
class UnsupportableVelocity : public std::runtime_error {
 public:
  UnsupportableVelocity(const std::string& what, double offending_speed)
      : std::runtime_error(what), offending_speed_(offending_speed) {}
  /// Speed (m/s) or conditional class speed that broke feasibility;
  /// NaN when the failure is aggregate rather than per-speed.
  double offending_speed() const noexcept { return offending_speed_; }

 private:
  double offending_speed_;
};

/// The average power constraint is too small for an optimal allocation with
/// all components positive and above their feasibility floors.
class InsufficientPowerBudget : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The exhaustive grid oracle only supports low dimensions.
class UnsupportedDimension : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Not enough events/batches to form the requested confidence interval.
class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace smallcell
