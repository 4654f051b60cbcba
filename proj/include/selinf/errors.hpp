#pragma once

#include <stdexcept>
#include <string>

namespace selinf {

// Bad arguments: dimension mismatches, invalid parameters, schema violations.
class input_error : public std::invalid_argument {
public:
    explicit input_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// A numeric procedure failed to reach its tolerance (solver non-convergence,
// root bracketing exhaustion). Carries the last residual when meaningful.
class numeric_error : public std::runtime_error {
public:
    numeric_error(const std::string& msg, double residual = 0.0)
        : std::runtime_error(msg), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

// Gram matrix (or similar) is singular to working precision.
class rank_deficiency_error : public std::runtime_error {
public:
    rank_deficiency_error(const std::string& msg, double condition_number)
        : std::runtime_error(msg), condition_number_(condition_number) {}
    double condition_number() const { return condition_number_; }

private:
    double condition_number_;
};

// Tied argmax in the first-knot selection: a measure-zero event for
// continuous errors; callers may resample.
class degenerate_selection_error : public std::runtime_error {
public:
    explicit degenerate_selection_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace selinf
