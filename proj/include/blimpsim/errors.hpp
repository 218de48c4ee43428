#pragma once

#include <stdexcept>
#include <string>

namespace blimpsim {

// Bad numeric input to a pure function (non-finite, out of domain).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Roll reached the Euler-angle singularity band.
class GimbalLockError : public std::runtime_error {
 public:
  explicit GimbalLockError(double phi)
      : std::runtime_error("gimbal lock: |phi| = " + std::to_string(phi) +
                           " rad is within 1e-3 of pi/2"),
        phi_(phi) {}
  double phi() const noexcept { return phi_; }

 private:
  double phi_;
};

// Scenario parse or validation failure. line is 1-based, 0 if unknown.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace blimpsim
