#pragma once

#include <stdexcept>
#include <string>

namespace ldhit {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid user-supplied configuration (dimension mismatch, bad rates, bad schema).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Argument outside the finiteness domain of the moment generating function.
class DomainError : public Error {
public:
    using Error::Error;
};

// The model family has no tilted sampler for the requested tilt.
class UnsupportedTilt : public Error {
public:
    using Error::Error;
};

// Newton solve for the conjugate point lambda(alpha) did not converge.
class NotInCramerRange : public Error {
public:
    using Error::Error;
};

class SingularHessian : public Error {
public:
    using Error::Error;
};

// Bracketing for the 1-D second-rate minimization exhausted its budget.
class NoInteriorMinimum : public Error {
public:
    using Error::Error;
};

class DualSolveFailed : public Error {
public:
    using Error::Error;
};

// Mean jump lies in the closed positive orthant: hitting is not a rare event.
class NoLargeDeviationRegime : public Error {
public:
    using Error::Error;
};

// One of the three clauses of the vertex condition fails outright.
class C3Violated : public Error {
public:
    using Error::Error;
};

// A clause of the vertex condition sits inside the numerical margin.
class C3Marginal : public Error {
public:
    using Error::Error;
};

class ConstrainedSolveFailed : public Error {
public:
    using Error::Error;
};

class SingularFrame : public Error {
public:
    using Error::Error;
};

class NonPositiveCurvature : public Error {
public:
    using Error::Error;
};

class TruncationBudgetExceeded : public Error {
public:
    using Error::Error;
};

class InvalidTilt : public Error {
public:
    using Error::Error;
};

class DegenerateFit : public Error {
public:
    using Error::Error;
};

}  // namespace ldhit
