#pragma once

#include <stdexcept>
#include <string>

namespace nmm {

// Raised when a caller breaks a documented precondition (dimension mismatch,
// point outside its manifold, non-positive scale parameter, ...).
class ContractViolation : public std::invalid_argument {
 public:
  explicit ContractViolation(const std::string& what)
      : std::invalid_argument(what) {}
};

// Raised when a numerical procedure fails at run time (NaN in a gradient,
// sampler exhausting its retry budget, unreadable input file).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace nmm
