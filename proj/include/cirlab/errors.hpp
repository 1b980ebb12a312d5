#pragma once

#include <stdexcept>
#include <string>

namespace cirlab {

/// A numerical-domain violation: a scheme or controller was asked to work
/// outside the region where its formula is defined.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The (scheme, controller, parameters) combination is not admissible.
class AdmissibilityError : public DomainError {
public:
    using DomainError::DomainError;
};

/// A trajectory exceeded its configured step ceiling.
class StepLimitError : public DomainError {
public:
    using DomainError::DomainError;
};

}  // namespace cirlab
