#pragma once

#include <stdexcept>
#include <string>

namespace isea {

/// Malformed input: bad dimensions, NaNs, out-of-range labels, invalid config.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A transceiver design that breaks a device's power budget.
class InfeasibleDesign : public std::runtime_error {
 public:
  InfeasibleDesign(std::size_t device, const std::string& what)
      : std::runtime_error(what), device_(device) {}
  std::size_t device() const noexcept { return device_; }

 private:
  std::size_t device_;
};

/// Instance outside the domain a closed-form solver covers.
class UnsupportedInstance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace isea
