#pragma once

#include <stdexcept>
#include <string>

namespace dhf {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Timestamp not on a whole hour.
class AlignmentError : public Error {
public:
    using Error::Error;
};

// Not enough trailing history to form a forecast input.
class WarmupError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent input data (bad files, ordering, ranges).
class DataError : public Error {
public:
    using Error::Error;
};

// Model fitting could not proceed (too few samples, empty input).
class FitError : public Error {
public:
    using Error::Error;
};

// Bad arguments or configuration supplied by the caller.
class ValidationError : public Error {
public:
    using Error::Error;
};

}  // namespace dhf
