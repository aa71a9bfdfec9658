#pragma once

#include <stdexcept>
#include <string>

namespace wkam {

/// Raised by make_grid for a non-positive length or fewer than two nodes.
class InvalidDomain : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Two grid functions (or a function and a cost) live on different grids.
class DomainMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A documented precondition of an operation does not hold for the given input
/// (not a subsolution, a parameter above its admissible bound, ...).
class PreconditionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A certificate the construction guarantees came out violated. Indicates a bug.
class CertificateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace wkam
