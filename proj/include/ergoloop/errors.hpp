#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ergoloop {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mismatched or invalid matrix/vector shapes.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// An enumeration would exceed its declared budget.
class BudgetError : public Error {
public:
    using Error::Error;
};

/// A broadcast signal left the range an agent family accepts.
class SignalRangeError : public Error {
public:
    SignalRangeError(const std::string& what, std::int64_t step, double pi)
        : Error(what), step(step), pi(pi) {}
    std::int64_t step;
    double pi;
};

/// Model parameters violate a declared invariant.
class ModelValidationError : public Error {
public:
    using Error::Error;
};

/// Exact (rational) data was required but not available.
class RepresentationError : public Error {
public:
    using Error::Error;
};

/// The loop's structure does not fit the requested analysis.
class UnsupportedStructureError : public Error {
public:
    using Error::Error;
};

/// An externally supplied sequence ran out.
class InputExhaustedError : public Error {
public:
    using Error::Error;
};

/// Experiment configuration could not be parsed or validated.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A requested key (initial condition, statistic) is not present.
class LookupError : public Error {
public:
    using Error::Error;
};

} // namespace ergoloop
