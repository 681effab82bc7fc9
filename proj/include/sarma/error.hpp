#pragma once

#include <stdexcept>
#include <string>

namespace sarma {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes or indices that do not fit together.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A precondition on argument values was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Duplicate decay parameters, which make the model non-identifiable.
class IdentifiabilityError : public Error {
public:
    using Error::Error;
};

/// Stationarity (or invertibility) requirement not met.
class StationarityError : public Error {
public:
    using Error::Error;
};

/// SVD/eigen/linear-solve failures and diverging iterations.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Malformed input files.
class DataError : public Error {
public:
    using Error::Error;
};

} // namespace sarma
