#pragma once

#include <stdexcept>
#include <string>

namespace conetomo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (r < 0, |x2| >= 1, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Division by a vanishing q.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// Profile violates q(0) = 0, q(r) > 0 on the range that is needed.
class ProfileInvalidError : public Error {
public:
    using Error::Error;
};

/// g = q'/q is not monotone on the requested window, so it cannot be inverted.
class BolkerViolationError : public Error {
public:
    using Error::Error;
};

/// Value lies outside the range attained by the function being inverted.
class OutOfRangeError : public Error {
public:
    using Error::Error;
};

/// Covector with xi1 == 0 or xi2 == 0; it has no image under the canonical relation.
class InvisibleCovectorError : public Error {
public:
    using Error::Error;
};

/// Grid, geometry or operator sizes that do not fit together.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Malformed or unreadable file contents.
class FormatError : public Error {
public:
    using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace conetomo
