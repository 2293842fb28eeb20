#pragma once

#include <stdexcept>
#include <string>

namespace msq {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of an operation (bad box, point outside grid, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A precondition that callers must establish was violated (admissibility of a sample, etc).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A numerical routine did not reach its requested accuracy.
class AccuracyError : public Error {
public:
    using Error::Error;
};

/// An integrand returned a non-finite value.
class EvaluationError : public Error {
public:
    EvaluationError(const std::string& what, double at)
        : Error(what + " (at v = " + std::to_string(at) + ")"), at_(at) {}
    double at() const noexcept { return at_; }

private:
    double at_;
};

/// A sum or formula was evaluated at one of its singular points.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// A decomposition or report failed one of its structural properties.
class ValidationError : public Error {
public:
    ValidationError(std::string property, const std::string& what)
        : Error(property + ": " + what), property_(std::move(property)) {}
    const std::string& property() const noexcept { return property_; }

private:
    std::string property_;
};

/// A check was requested outside the hypotheses of the inequality it measures.
class SpecError : public Error {
public:
    using Error::Error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace msq
