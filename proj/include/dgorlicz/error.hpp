#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dgorlicz {

/// Raised when an argument violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical decision (convergence verdict, bracketing) could not be made
/// reliably. Never converted into a guess.
class Inconclusive : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative procedure exhausted its budget or could not bracket a root.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Nonlinear solve ran out of budget. Carries the best iterate found.
class SolveFailure : public NumericalFailure {
public:
    SolveFailure(const std::string& what, std::vector<double> best, double residual)
        : NumericalFailure(what), best_(std::move(best)), residual_(residual) {}

    const std::vector<double>& best_iterate() const noexcept { return best_; }
    double residual() const noexcept { return residual_; }

private:
    std::vector<double> best_;
    double residual_;
};

/// Results that must agree by theory disagree (e.g. a Convergent data
/// condition but a level-set series that exceeds its integral bound).
class Inconsistency : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dgorlicz
