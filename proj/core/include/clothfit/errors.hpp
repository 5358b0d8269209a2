#pragma once

#include <stdexcept>
#include <string>

namespace clothfit {

// Base for all library errors so callers can catch the whole family.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateSubset : Error {
    using Error::Error;
};

struct ZeroExtent : Error {
    using Error::Error;
};

struct MismatchedContext : Error {
    using Error::Error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct InvalidParams : Error {
    using Error::Error;
};

struct WrongCategory : Error {
    using Error::Error;
};

struct NumericalBlowup : Error {
    using Error::Error;
};

struct InvalidPixel : Error {
    using Error::Error;
};

struct AllInvalid : Error {
    using Error::Error;
};

struct NoValidAction : Error {
    using Error::Error;
};

struct InsufficientMeshes : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

} // namespace clothfit
