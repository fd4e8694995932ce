#pragma once

#include <stdexcept>
#include <string>

namespace meanforce {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "Error"; }
};

/// Model parameters violate a construction invariant (shape, sign, orthogonality, stability).
class ModelError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "ModelError"; }
};

/// Im chi(omega) has a negative eigenvalue beyond floating-point slack.
class NotPassive : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "NotPassive"; }
};

class QuadratureFailure : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "QuadratureFailure"; }
};

/// Lambda(omega) is numerically singular (condition number above 1e14).
class SingularResolvent : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "SingularResolvent"; }
};

/// Discrete-bath stiffness matrix is not positive definite.
class UnstableBath : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "UnstableBath"; }
};

class EigenFailure : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "EigenFailure"; }
};

/// Energy drift of the deterministic check orbit exceeds 1e-3 per period.
class StepSizeTooLarge : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "StepSizeTooLarge"; }
};

} // namespace meanforce
