#ifndef HSTORI_ERRORS_HPP
#define HSTORI_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hstori {

// Base class for all failures raised by the toolkit.  Subtypes exist so that
// callers (and the CLI) can distinguish "bad input" from "the numerics gave up".
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid arguments, malformed configs/files, violated preconditions.
struct ValidationError : Error {
    using Error::Error;
};

// Numerical failures: divergence, degeneracy, inconsistent right-hand sides.
struct NumericError : Error {
    using Error::Error;
};

struct UnsupportedOrderError : ValidationError {
    using ValidationError::ValidationError;
};
struct InvalidMotionError : ValidationError {
    using ValidationError::ValidationError;
};
struct DegenerateMetricError : NumericError {
    using NumericError::NumericError;
};
struct ImmersionDegeneracyError : NumericError {
    using NumericError::NumericError;
};
struct TotallyRealViolationError : NumericError {
    using NumericError::NumericError;
};
struct InconsistentRhsError : NumericError {
    using NumericError::NumericError;
};
struct DivergedError : NumericError {
    double last_residual = 0.0;
    DivergedError(const std::string& msg, double res)
        : NumericError(msg), last_residual(res) {}
};
struct DegenerateRadiiError : NumericError {
    using NumericError::NumericError;
};
struct DegenerateCriticalPointError : NumericError {
    using NumericError::NumericError;
};
struct NoFrameFoundError : NumericError {
    std::string diagnostics;
    NoFrameFoundError(const std::string& msg, std::string diag)
        : NumericError(msg), diagnostics(std::move(diag)) {}
};

} // namespace hstori

#endif
