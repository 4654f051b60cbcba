#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "selinf/errors.hpp"
#include "selinf/events.hpp"

namespace selinf {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct ConstraintGeometry {
    Vector alpha;        // A Sigma eta / eta^T Sigma eta
    double eta_variance; // eta^T Sigma eta
};

struct TruncationInterval {
    double lower = -kInf;
    double upper = kInf;
};

struct PivotInputs {
    double observed;
    double variance;
    double mean;
    TruncationInterval interval;
};

struct DeltaCheckConfig {
    double delta;
};

namespace normal {

inline double cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }
inline double sf(double z) { return 0.5 * std::erfc(z * M_SQRT1_2); }

// log of the upper tail, stable out to z in the hundreds. For large z uses
// the Mills-ratio continued fraction Q(z) = phi(z) / (z + 1/(z + 2/(z + ...))).
inline double log_sf(double z) {
    if (z == kInf) return -kInf;
    if (z == -kInf) return 0.0;
    if (z < 8.0) return std::log(sf(z));
    double t = 0.0;
    for (int k = 96; k >= 1; --k) t = k / (z + t);
    const double log_phi = -0.5 * z * z - 0.5 * std::log(2.0 * M_PI);
    return log_phi - std::log(z + t);
}

} // namespace normal

// CDF of N(m, variance) truncated to [a, b], evaluated at x. Endpoints may be
// +-inf. When the whole interval sits in one tail the naive Phi difference
// underflows; those cases go through log-survival differences with expm1.
inline double truncated_gaussian_cdf(double x, double variance, double mean, double a, double b) {
    if (!(variance > 0)) throw input_error("truncated_gaussian_cdf: variance must be positive");
    if (!(a < b)) throw input_error("truncated_gaussian_cdf: need a < b");
    const double sigma = std::sqrt(variance);
    const double za = (a - mean) / sigma;
    const double zb = (b - mean) / sigma;
    double zx = (x - mean) / sigma;
    if (zx <= za) return 0.0;
    if (zx >= zb) return 1.0;

    if (za >= 4.0) {
        // right tail: F = [Q(za) - Q(zx)] / [Q(za) - Q(zb)] in log space
        const double la = normal::log_sf(za);
        const double num = std::expm1(normal::log_sf(zx) - la);
        const double den = std::expm1(normal::log_sf(zb) - la);
        return std::clamp(num / den, 0.0, 1.0);
    }
    if (zb <= -4.0) {
        // left tail: reflect
        const double la = normal::log_sf(-zb);
        const double num = std::expm1(normal::log_sf(-zx) - la);
        const double den = std::expm1(normal::log_sf(-za) - la);
        return std::clamp(1.0 - num / den, 0.0, 1.0);
    }
    const double denom = normal::cdf(zb) - normal::cdf(za);
    return std::clamp((normal::cdf(zx) - normal::cdf(za)) / denom, 0.0, 1.0);
}

// alpha = A Sigma eta / (eta^T Sigma eta); rows with alpha_j < 0 bound
// eta^T y from below, alpha_j > 0 from above, |alpha_j| <= 1e-12 ||alpha||_inf
// contribute to neither.
inline std::pair<TruncationInterval, ConstraintGeometry> truncation_interval(
    const SelectionEvent& event, const Vector& sigma_diag, const Vector& eta, const Vector& y) {
    if (eta.size() != event.A.cols() || y.size() != event.A.cols() ||
        sigma_diag.size() != event.A.cols())
        throw input_error("truncation_interval: dimension mismatch");
    Vector sigma_eta = sigma_diag.asDiagonal() * eta;
    const double eta_var = eta.dot(sigma_eta);
    if (!(eta_var > 0)) throw input_error("truncation_interval: eta^T Sigma eta <= 0");

    Vector alpha = (event.A * sigma_eta) / eta_var;
    Vector Ay = event.A * y;
    const double eta_y = eta.dot(y);
    const double zero_tol = 1e-12 * alpha.cwiseAbs().maxCoeff();

    TruncationInterval iv;
    for (Eigen::Index j = 0; j < alpha.size(); ++j) {
        if (std::abs(alpha[j]) <= zero_tol) continue;
        const double ratio = (event.b[j] - Ay[j] + alpha[j] * eta_y) / alpha[j];
        if (alpha[j] < 0)
            iv.lower = std::max(iv.lower, ratio);
        else
            iv.upper = std::min(iv.upper, ratio);
    }
    return {iv, ConstraintGeometry{std::move(alpha), eta_var}};
}

// P = 2 min(F, 1-F).
inline double two_sided_pivot(const PivotInputs& in) {
    const double f =
        truncated_gaussian_cdf(in.observed, in.variance, in.mean, in.interval.lower, in.interval.upper);
    return 2.0 * std::min(f, 1.0 - f);
}

// Selective p-value for H0: eta^T mu = null_mean, conditioning on the event.
inline double selective_pvalue(const SelectionEvent& event, const Vector& sigma_diag,
                               const Vector& eta, const Vector& y, double null_mean) {
    if (!event.contains(y)) throw input_error("selective_pvalue: y is not in the selection event");
    auto [iv, geom] = truncation_interval(event, sigma_diag, eta, y);
    return two_sided_pivot(PivotInputs{eta.dot(y), geom.eta_variance, null_mean, iv});
}

namespace detail {

// Solve F(observed; var, m, L, U) = target for m by bisection. F is
// continuous and strictly decreasing in m; the bracket starts at
// observed +- 10 sigma and doubles up to 2^6 times.
inline double invert_cdf_in_mean(double observed, double variance, const TruncationInterval& iv,
                                 double target) {
    const double sigma = std::sqrt(variance);
    auto f = [&](double m) { return truncated_gaussian_cdf(observed, variance, m, iv.lower, iv.upper); };
    double lo = observed - 10.0 * sigma; // f(lo) large
    double hi = observed + 10.0 * sigma; // f(hi) small
    int doublings = 0;
    while (f(lo) < target && doublings < 64) {
        lo = observed - 2.0 * (observed - lo);
        ++doublings;
    }
    while (f(hi) > target && doublings < 64) {
        hi = observed + 2.0 * (hi - observed);
        ++doublings;
    }
    if (f(lo) < target || f(hi) > target)
        throw numeric_error("invert_pivot_interval: bracketing failed after expansion limit",
                            std::abs(f(lo) - target));
    while (hi - lo > 1e-9 * sigma) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) >= target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

// (1-alpha) selective confidence interval for eta^T mu: the set of means m
// whose one-sided F lies in [alpha/2, 1 - alpha/2].
inline std::pair<double, double> invert_pivot_interval(const SelectionEvent& event,
                                                       const Vector& sigma_diag, const Vector& eta,
                                                       const Vector& y, double alpha) {
    if (!(alpha > 0 && alpha < 1)) throw input_error("invert_pivot_interval: alpha not in (0,1)");
    if (!event.contains(y)) throw input_error("invert_pivot_interval: y is not in the selection event");
    auto [iv, geom] = truncation_interval(event, sigma_diag, eta, y);
    const double obs = eta.dot(y);
    const double lo = detail::invert_cdf_in_mean(obs, geom.eta_variance, iv, 1.0 - alpha / 2.0);
    const double hi = detail::invert_cdf_in_mean(obs, geom.eta_variance, iv, alpha / 2.0);
    return {lo, hi};
}

// Empirical rates for the two truncation-interval conditions: width U-L
// below delta, and distance of the nearer finite endpoint beyond 1/delta.
// Infinite endpoints satisfy the width condition; with both infinite the
// distance counts as 0.
inline std::pair<double, double> delta_assumption_check(const std::vector<TruncationInterval>& ivs,
                                                        const DeltaCheckConfig& cfg) {
    if (ivs.empty()) throw input_error("delta_assumption_check: empty collection");
    if (!(cfg.delta > 0 && cfg.delta < 1)) throw input_error("delta_assumption_check: delta not in (0,1)");
    size_t width_bad = 0, dist_bad = 0;
    for (const auto& iv : ivs) {
        const bool lo_fin = std::isfinite(iv.lower), hi_fin = std::isfinite(iv.upper);
        if (lo_fin && hi_fin && iv.upper - iv.lower < cfg.delta) ++width_bad;
        double dist = 0.0;
        if (lo_fin && hi_fin)
            dist = std::min(std::abs(iv.lower), std::abs(iv.upper));
        else if (lo_fin)
            dist = std::abs(iv.lower);
        else if (hi_fin)
            dist = std::abs(iv.upper);
        if (dist > 1.0 / cfg.delta) ++dist_bad;
    }
    const double n = static_cast<double>(ivs.size());
    return {width_bad / n, dist_bad / n};
}

// Global-null p-value of the first-knot statistic: the survival form
// 1 - F(lambda_1; Theta_j*j*, 0, L, U), which reduces to
// (1 - Phi(lambda_1/sigma)) / (1 - Phi(lambda_2/sigma)) for orthonormal
// designs with Sigma = sigma^2 I.
inline double covtest_pvalue(double lambda1, const CovTestBounds& bounds) {
    if (!(bounds.theta_jstar > 0)) throw input_error("covtest_pvalue: Theta_{j*j*} <= 0");
    const double sigma = std::sqrt(bounds.theta_jstar);
    const double zx = lambda1 / sigma;
    const double za = bounds.lower / sigma;
    const double zb = bounds.upper / sigma;
    if (zx <= za) return 1.0;
    if (zx >= zb) return 0.0;
    if (za >= 4.0) {
        const double la = normal::log_sf(za), lx = normal::log_sf(zx), lb = normal::log_sf(zb);
        return std::clamp(std::exp(lx - la) * std::expm1(lb - lx) / std::expm1(lb - la), 0.0, 1.0);
    }
    const double qb = normal::sf(zb);
    return std::clamp((normal::sf(zx) - qb) / (normal::sf(za) - qb), 0.0, 1.0);
}

} // namespace selinf
