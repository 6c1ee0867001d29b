#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sdelong {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Invalid arguments or configuration supplied by the caller.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Non-finite state handed to a coefficient evaluator.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The implicit solver could not reach its residual tolerance.
///
/// Carries the last Newton iterate and its residual. `step` and `path` are
/// filled in by the simulation layer when the failure happens inside an
/// ensemble run (-1 when unknown).
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, Vector last_iterate, double residual)
        : std::runtime_error(what), last_iterate_(std::move(last_iterate)), residual_(residual) {}

    const Vector& last_iterate() const noexcept { return last_iterate_; }
    double residual() const noexcept { return residual_; }

    std::int64_t step = -1;
    std::int64_t path = -1;

private:
    Vector last_iterate_;
    double residual_;
};

}  // namespace sdelong
