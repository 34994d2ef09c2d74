#pragma once

#include <stdexcept>
#include <string>

namespace rankone {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition (bad measure, zero coupling, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A kernel was asked for a value that does not exist as a finite number,
/// or a numerical procedure failed. Carries the name of the operation.
class NumericalError : public Error {
public:
    NumericalError(std::string op, const std::string& what)
        : Error(op + ": " + what), op_(std::move(op)) {}

    const std::string& op() const noexcept { return op_; }

private:
    std::string op_;
};

/// The absolutely continuous part has been exhausted (or fell below the
/// configured floor); there is nothing left to perturb.
class Localized : public Error {
public:
    using Error::Error;
};

} // namespace rankone
