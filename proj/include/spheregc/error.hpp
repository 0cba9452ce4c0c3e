#pragma once

#include <stdexcept>
#include <string>

namespace spheregc {

// Base class for all library failures. Subclasses map onto CLI exit codes
// and HTTP status codes in the service layer.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad arguments or violated preconditions.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Filesystem failures: unreadable, unwritable, truncated.
class IoError : public Error {
public:
    using Error::Error;
};

// Files that can be read but whose content is not acceptable.
class FormatError : public Error {
public:
    using Error::Error;
};

class GeometryMismatch : public Error {
public:
    using Error::Error;
};

class SeedOutOfBounds : public Error {
public:
    using Error::Error;
};

} // namespace spheregc
