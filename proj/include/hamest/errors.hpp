#pragma once

#include <stdexcept>
#include <string>

namespace hamest {

// Bad inputs, broken schemas, violated preconditions. CLI exit code 2.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Well-formed but ill-posed problem instance (flat objective, zero
// displacement, non-bracketed minimum). CLI exit code 3.
struct DegenerateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An optimizer exhausted its budget without an acceptable fit. CLI exit code 4.
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure inside a solver: step-size underflow, norm drift,
// vanishing Doppler denominator.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Spline evaluated outside its knot span. Kept distinct from NumericError so
// callers can tell a domain violation from a solver failure.
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace hamest
