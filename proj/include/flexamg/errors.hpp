#pragma once

#include <stdexcept>
#include <string>

namespace flexamg {

/// Dimension or index-structure mismatch in a sparse kernel.
struct StructuralError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Out-of-range argument to a generator or configuration.
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Failure while building the multigrid hierarchy.
struct SetupError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (e.g. executing an invalid cycle).
struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};

/// Malformed text input; the message names the offending line.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad command line or configuration; the message names the field.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A solve that should have converged did not.
struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace flexamg
