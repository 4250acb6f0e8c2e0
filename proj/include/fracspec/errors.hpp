#pragma once

#include <stdexcept>
#include <string>

namespace fracspec {

/// Raised when an input violates a documented precondition.
struct InvalidParameter : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Raised when an argument lies outside the supported evaluation domain.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct OverflowError : std::overflow_error {
    using std::overflow_error::overflow_error;
};

/// A numerical stage could not reach its declared tolerance.
struct ToleranceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IllConditioned : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ProvenanceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fracspec
