#ifndef FINSLER_ERRORS_HPP
#define FINSLER_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace finsler {

// Base for everything thrown on purpose by this library.  Callers that want
// to distinguish failure modes catch the concrete types below.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad request: unsupported order, dimension, malformed scenario config.
struct ConfigError : Error {
    using Error::Error;
};

// Derivative of an order the jet no longer carries.
struct OrderError : Error {
    using Error::Error;
};

// Division / sqrt / inversion at a value too close to zero, or a matrix
// whose determinant vanishes at the base point.
struct SingularError : Error {
    using Error::Error;
};

// Fundamental tensor not positive definite, metric degenerate at a sample.
struct DegeneracyError : Error {
    using Error::Error;
};

// k2 == k1*k3: the family collapses to a Randers-type metric, which the
// deformation theory here excludes.
struct RandersDegenerateError : Error {
    using Error::Error;
};

// Evaluation outside the validity window (phi domain, regularity window,
// chart radius, deformation bracket).
struct DomainError : Error {
    using Error::Error;
};

// Root bracketing found no root, or more than one candidate.
struct InversionError : Error {
    using Error::Error;
};

// A quantity that must be constant over the chart is not.
struct ConstancyError : Error {
    using Error::Error;
};

} // namespace finsler

#endif
