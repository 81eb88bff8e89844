#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dphase {

/// Process exit codes used by the command-line runner.
enum class ExitCode : int {
    success = 0,
    config_error = 2,
    gate_error = 3,
    convergence_error = 4,
    verification_error = 5,
};

/// Base of all library errors; carries the exit code the runner maps it to.
class Error : public std::runtime_error {
public:
    Error(const std::string& what, ExitCode code)
        : std::runtime_error(what), code_(code) {}

    ExitCode code() const noexcept { return code_; }

private:
    ExitCode code_;
};

/// Invalid arguments (bad resolution, negative weight, zero function, ...).
class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(what, ExitCode::config_error) {}
};

/// No upper/lower constant found below the cap: the reaction is not superlinear enough.
class SuperlinearityError : public Error {
public:
    explicit SuperlinearityError(const std::string& what) : Error(what, ExitCode::config_error) {}
};

/// lambda does not exceed the first eigenvalue.
class GateError : public Error {
public:
    GateError(const std::string& what, double lambda, double lambda1)
        : Error(what, ExitCode::gate_error), lambda_(lambda), lambda1_(lambda1) {}

    double lambda() const noexcept { return lambda_; }
    double lambda1() const noexcept { return lambda1_; }

private:
    double lambda_;
    double lambda1_;
};

/// Iteration budget exhausted. The best iterate (nodal values) is attached.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> best, double best_residual)
        : Error(what, ExitCode::convergence_error), best_(std::move(best)),
          best_residual_(best_residual) {}

    const std::vector<double>& best_iterate() const noexcept { return best_; }
    double best_residual() const noexcept { return best_residual_; }

private:
    std::vector<double> best_;
    double best_residual_;
};

/// A computed object failed a post-hoc check (sign, bound, energy, positivity).
class VerificationError : public Error {
public:
    explicit VerificationError(const std::string& what) : Error(what, ExitCode::verification_error) {}
};

class PositivityError : public VerificationError {
public:
    explicit PositivityError(const std::string& what) : VerificationError(what) {}
};

class SeedError : public VerificationError {
public:
    explicit SeedError(const std::string& what) : VerificationError(what) {}
};

} // namespace dphase
