#pragma once

#include <cmath>
#include <random>
#include <string>

#include "selinf/design.hpp"
#include "selinf/errors.hpp"

namespace selinf {

// Centered error law with a declared variance and its analytic third
// absolute moment. student_t requires df >= 7 for third-moment margin.
struct ErrorFamily {
    std::string name; // gaussian | laplace | centered_exponential | rademacher | student_t
    double variance = 1.0;
    double df = 0.0; // student_t only

    double sigma() const { return std::sqrt(variance); }

    double third_abs_moment() const {
        const double s3 = variance * sigma();
        if (name == "gaussian") return s3 * 2.0 * std::sqrt(2.0 / M_PI);
        if (name == "laplace") return s3 * 3.0 / std::sqrt(2.0);
        if (name == "centered_exponential") return s3 * (12.0 / M_E - 2.0);
        if (name == "rademacher") return s3;
        if (name == "student_t") {
            // E|T|^3 = nu^{3/2} Gamma((nu-3)/2) / (sqrt(pi) Gamma(nu/2)); draws
            // are scaled by sqrt((nu-2)/nu) to reach the declared variance.
            const double raw = std::exp(1.5 * std::log(df) + std::lgamma((df - 3.0) / 2.0) -
                                        0.5 * std::log(M_PI) - std::lgamma(df / 2.0));
            const double c = std::sqrt((df - 2.0) / df);
            return s3 * c * c * c * raw;
        }
        throw input_error("ErrorFamily: unknown family '" + name + "'");
    }

    void validate() const {
        if (!(variance > 0)) throw input_error("ErrorFamily: variance must be positive");
        if (name == "student_t" && !(df >= 7))
            throw input_error("ErrorFamily: student_t needs df >= 7");
        (void)third_abs_moment(); // rejects unknown names
    }
};

inline Vector draw_errors(const ErrorFamily& family, Eigen::Index n, std::mt19937_64& gen) {
    family.validate();
    Vector out(n);
    const double s = family.sigma();
    if (family.name == "gaussian") {
        std::normal_distribution<double> d(0.0, s);
        for (Eigen::Index i = 0; i < n; ++i) out[i] = d(gen);
    } else if (family.name == "laplace") {
        std::exponential_distribution<double> d(1.0);
        std::bernoulli_distribution sign(0.5);
        const double scale = s / std::sqrt(2.0);
        for (Eigen::Index i = 0; i < n; ++i) out[i] = (sign(gen) ? 1.0 : -1.0) * scale * d(gen);
    } else if (family.name == "centered_exponential") {
        std::exponential_distribution<double> d(1.0);
        for (Eigen::Index i = 0; i < n; ++i) out[i] = s * (d(gen) - 1.0);
    } else if (family.name == "rademacher") {
        std::bernoulli_distribution sign(0.5);
        for (Eigen::Index i = 0; i < n; ++i) out[i] = sign(gen) ? s : -s;
    } else { // student_t
        std::student_t_distribution<double> d(family.df);
        const double c = s * std::sqrt((family.df - 2.0) / family.df);
        for (Eigen::Index i = 0; i < n; ++i) out[i] = c * d(gen);
    }
    return out;
}

} // namespace selinf
