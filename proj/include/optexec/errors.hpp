#pragma once

#include <stdexcept>
#include <string>

namespace optexec {

/// Argument outside the documented domain of an operation.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The model does not satisfy the growth condition h(x) -> infinity, so
/// h^{-1} and nu_h are undefined (the Linear family).
class A4Violation : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// A closed-form result was requested outside the region where it holds,
/// e.g. the TWAP formula with x0 > nu_h * T.
class HypothesisViolation : public std::domain_error {
public:
    HypothesisViolation(const std::string& what, std::string hint)
        : std::domain_error(what), hint_(std::move(hint)) {}

    const std::string& hint() const noexcept { return hint_; }

private:
    std::string hint_;
};

/// A numerical routine failed to converge or produced non-finite values.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace optexec
