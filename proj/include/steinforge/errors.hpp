#pragma once

#include <stdexcept>
#include <string>

namespace steinforge {

// Base type for every failure raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A user callable produced NaN where a finite value was required.
struct EvaluationError : Error { using Error::Error; };

// Invalid distribution parameters (b <= a, p outside (0,1), nu <= 2, ...).
struct ParameterError : Error { using Error::Error; };

// Unknown family or operator name.
struct CatalogError : Error { using Error::Error; };

// Point lies outside the support required by the operation.
struct SupportError : Error { using Error::Error; };

// Density or psi vanished at an interior point where division is required.
struct DegeneracyError : Error { using Error::Error; };

// Evaluation at a support endpoint with no registered boundary rule.
struct BoundaryError : Error { using Error::Error; };

// P(Z_u in S_theta) = 0 somewhere on a parameter path.
struct ConditioningError : Error { using Error::Error; };

// Requested capability (e.g. a sampler) is not registered for the family.
struct CapabilityError : Error { using Error::Error; };

// Malformed input file, config or expression.
struct InputError : Error { using Error::Error; };

// Stein-equation solver failure other than quadrature divergence.
struct SolverError : Error { using Error::Error; };

} // namespace steinforge
