#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "selinf/design.hpp"
#include "selinf/errors.hpp"

namespace selinf {

struct LassoFit {
    Vector beta;                 // length p
    std::vector<int> active;     // E, ascending 0-based indices
    std::vector<int> signs;      // z_E in {-1,+1}, aligned with active
    double lambda = 0.0;
    double kkt_residual = 0.0;
};

namespace detail {

inline double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

} // namespace detail

// Max KKT violation of `beta` for 1/2 ||y - X b||^2 + lambda ||b||_1:
// active coordinates must satisfy x_j^T r = lambda sign(b_j) exactly,
// inactive ones |x_j^T r| <= lambda. Zero-threshold 1e-10 on |beta_j|.
inline double verify_kkt(const DesignMatrix& X, const Vector& y, const Vector& beta,
                         double lambda) {
    const Matrix& Xv = X.values();
    if (y.size() != Xv.rows() || beta.size() != Xv.cols())
        throw input_error("verify_kkt: dimension mismatch");
    Vector grad = Xv.transpose() * (y - Xv * beta);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        double v;
        if (std::abs(beta[j]) > 1e-10)
            v = std::abs(grad[j] - lambda * (beta[j] > 0 ? 1.0 : -1.0));
        else
            v = std::max(0.0, std::abs(grad[j]) - lambda);
        worst = std::max(worst, v);
    }
    return worst;
}

inline double verify_kkt(const DesignMatrix& X, const Vector& y, const LassoFit& fit) {
    return verify_kkt(X, y, fit.beta, fit.lambda);
}

// Cyclic coordinate descent with active-set restarts. Converged when the
// full-problem KKT residual is <= tol; at most max_sweeps full sweeps.
inline LassoFit solve_lasso(const DesignMatrix& X, const Vector& y, double lambda,
                            double tol = 1e-10, int max_sweeps = 100000) {
    const Matrix& Xv = X.values();
    const Eigen::Index n = Xv.rows(), p = Xv.cols();
    if (y.size() != n) throw input_error("solve_lasso: y has wrong length");
    if (!(lambda > 0)) throw input_error("solve_lasso: lambda must be positive");

    Vector sqnorm(p);
    for (Eigen::Index j = 0; j < p; ++j) sqnorm[j] = Xv.col(j).squaredNorm();

    Vector beta = Vector::Zero(p);
    Vector resid = y; // y - X beta, maintained incrementally

    auto sweep = [&](const std::vector<int>& idx) {
        double max_move = 0.0;
        for (int j : idx) {
            if (sqnorm[j] <= 0.0) continue;
            const double old = beta[j];
            const double rho = Xv.col(j).dot(resid) + sqnorm[j] * old;
            const double bj = detail::soft_threshold(rho, lambda) / sqnorm[j];
            if (bj != old) {
                resid.noalias() += Xv.col(j) * (old - bj);
                beta[j] = bj;
                max_move = std::max(max_move, std::abs(bj - old));
            }
        }
        return max_move;
    };

    std::vector<int> all(p);
    for (Eigen::Index j = 0; j < p; ++j) all[j] = static_cast<int>(j);

    double residual = std::numeric_limits<double>::infinity();
    int sweeps = 0;
    while (sweeps < max_sweeps) {
        resid.noalias() = y - Xv * beta; // refresh against incremental drift
        sweep(all);
        ++sweeps;
        // polish the current active set before the next full pass
        std::vector<int> act;
        for (Eigen::Index j = 0; j < p; ++j)
            if (beta[j] != 0.0) act.push_back(static_cast<int>(j));
        while (!act.empty() && sweep(act) > 1e-4 * tol) {}
        residual = verify_kkt(X, y, beta, lambda);
        if (residual <= tol) break;
    }
    if (residual > tol)
        throw numeric_error("solve_lasso: no convergence after " + std::to_string(sweeps) +
                                " sweeps, KKT residual " + std::to_string(residual),
                            residual);

    LassoFit fit;
    fit.lambda = lambda;
    fit.kkt_residual = residual;
    fit.beta = beta;
    for (Eigen::Index j = 0; j < p; ++j) {
        if (std::abs(beta[j]) <= 1e-10) {
            fit.beta[j] = 0.0;
        } else {
            fit.active.push_back(static_cast<int>(j));
            fit.signs.push_back(beta[j] > 0 ? 1 : -1);
        }
    }
    return fit;
}

} // namespace selinf
