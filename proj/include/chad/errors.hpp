#pragma once

#include <stdexcept>
#include <string>

namespace chad {

// Thrown for bad model/procedure parameters and malformed config input.
// The CLI maps this family to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Runtime failures (exit code 3 at the CLI surface).
struct RuntimeFailure : std::runtime_error {
    explicit RuntimeFailure(const std::string& msg) : std::runtime_error(msg) {}
};

// A replication ran past the step cap without stopping.  Either the procedure
// cannot terminate on this model (e.g. a static design with a zero transition
// rate) or the thresholds are absurd; in both cases aborting beats spinning.
struct HorizonExceeded : RuntimeFailure {
    HorizonExceeded(long long horizon, const std::string& what_ran)
        : RuntimeFailure(what_ran + ": no stop within " + std::to_string(horizon) + " steps"),
          horizon(horizon) {}
    long long horizon;
};

// Value iteration exhausted its iteration cap before the residual fell
// below tolerance.
struct ConvergenceFailure : RuntimeFailure {
    ConvergenceFailure(double residual, long long iterations)
        : RuntimeFailure("value iteration stalled: residual " + std::to_string(residual) +
                         " after " + std::to_string(iterations) + " iterations"),
          residual(residual), iterations(iterations) {}
    double residual;
    long long iterations;
};

// No candidate in a calibration sweep satisfied the error constraint.
struct CalibrationFailure : RuntimeFailure {
    explicit CalibrationFailure(const std::string& msg) : RuntimeFailure(msg) {}
};

} // namespace chad
