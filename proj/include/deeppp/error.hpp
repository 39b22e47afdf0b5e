#pragma once

#include <stdexcept>
#include <string>

namespace deeppp {

/// Bad user input: malformed files, unknown ids, invalid parameters.
/// Maps to CLI exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative solver hit its iteration cap.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
          residual_(residual) {}

    double residual() const { return residual_; }

private:
    double residual_;
};

/// A metric is undefined on the given input (e.g. AUC of a single class).
class UndefinedMetricError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Broken stored artifact (checksum mismatch, unknown version).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace deeppp
