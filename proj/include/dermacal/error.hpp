#pragma once

#include <stdexcept>
#include <string>

namespace dermacal {

/// Base for every error the library raises. The CLI maps the subclasses to
/// exit codes: validation/domain -> 1, analysis infeasibility -> 2, I/O -> 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input outside the mathematical domain of an operation (e.g. sRGB > 1, L* <= 0).
class DomainError : public Error {
public:
    using Error::Error;
};

// Malformed input data or configuration.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Too few samples, groups, targets or raters for the requested analysis.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class SingularFitError : public Error {
public:
    SingularFitError(const std::string& what, int rank)
        : Error(what), rank_(rank) {}
    int rank() const noexcept { return rank_; }

private:
    int rank_;
};

// The analysis is well-formed but cannot be carried out (zero pairs,
// more folds than subjects, undefined statistic).
class InfeasibleError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace dermacal
