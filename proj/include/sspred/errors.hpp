#pragma once

#include <stdexcept>
#include <string>

namespace sspred {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input or configuration. Maps to CLI exit code 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

class ChronologyError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class WindowError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class OutOfRangeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DimensionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Non-finite loss or gradient during training. Maps to CLI exit code 3.
class DivergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace sspred
