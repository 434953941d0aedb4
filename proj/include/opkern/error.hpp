#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace opkern {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed kernel spec or site list text. Carries the byte offset of the failure.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t position)
        : Error(message + " (at position " + std::to_string(position) + ")"), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// A parameter is outside its admissible range (sigma <= 0, non-PSD coregion matrix, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// Numerical precondition failure: indefinite matrix, failed factorization, non-finite entries.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Elements or transform families from different contexts were mixed.
class ContextError : public Error {
public:
    using Error::Error;
};

}  // namespace opkern
