#pragma once

#include <stdexcept>
#include <string>

namespace lattice_lab {

/// Input violates a documented invariant (non-unimodular basis, non-monotone ψ, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Enumeration would exceed its configured candidate cap.
class EnumerationLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// |a_i t| above the flow overflow guard.
class OverflowGuardError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// An asymptotic construction was asked for before its range starts
/// ("excursion not yet defined", "not yet in range", "no excursion at t").
class NotInRangeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adaptive quadrature failed to reach its tolerance.
class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
[[noreturn]] inline void invariant_failure(const std::string& what) {
  throw std::logic_error("internal invariant violated: " + what);
}
}  // namespace detail

}  // namespace lattice_lab
