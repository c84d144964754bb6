#pragma once

#include <stdexcept>
#include <string>

namespace ctaug {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A spec document or domain type failed validation (bad field, broken invariant).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// An operation was called outside its domain: units mismatch, shape mismatch,
/// empty label set, degenerate calibration and the like.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Reading or writing a file failed.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace ctaug
