#pragma once

#include <stdexcept>
#include <string>

namespace lsmix {

/// Argument outside the mathematical domain of an operation (v <= 0, pi outside (0, 1/2], ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class EmptySampleError : public std::invalid_argument {
 public:
  EmptySampleError() : std::invalid_argument("sample must contain at least one observation") {}
};

/// Responsibilities summed to 0 or to n, so one component has no mass and its variance is undefined.
class DegenerateResponsibilities : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double partial_estimate)
      : std::runtime_error(what), partial_(partial_estimate) {}

  double partial_estimate() const noexcept { return partial_; }

 private:
  double partial_;
};

}  // namespace lsmix
