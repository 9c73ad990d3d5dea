#pragma once

#include <stdexcept>
#include <string>

namespace rflr {

// Bad argument values: out-of-range probabilities, negative tuning, bad grid sizes.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Vector/matrix dimensions that do not line up (curves vs grid, theta vs basis).
class ShapeMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A probability sits on the boundary of (0,1) where a formula needs interior values.
class NumericalDomain : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Normal equations or sandwich bread matrix could not be inverted.
class SingularMatrix : public std::runtime_error {
 public:
  SingularMatrix(const std::string& what, double condition)
      : std::runtime_error(what), condition_(condition) {}
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

}  // namespace rflr
