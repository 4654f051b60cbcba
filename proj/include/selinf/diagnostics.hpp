#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "selinf/events.hpp"
#include "selinf/truncnorm.hpp"

namespace selinf {

// M = max_{i,j} |A_ij / (A Sigma eta)_i| + ||eta||_inf, r = nrow(A).
// A row with (A Sigma eta)_i = 0 makes M infinite; the row index is kept.
struct InfluenceSummary {
    double M = 0.0;
    bool is_infinite = false;
    std::optional<Eigen::Index> infinite_row;
    Eigen::Index r = 0;
    size_t observed_state_count = 1;
};

inline InfluenceSummary influence_constant(const Matrix& A, const Vector& sigma_diag,
                                           const Vector& eta) {
    InfluenceSummary out;
    out.r = A.rows();
    const double eta_inf = eta.cwiseAbs().maxCoeff();
    if (A.rows() == 0) { // no-selection convention
        out.M = eta_inf;
        return out;
    }
    Vector scale = A * (sigma_diag.asDiagonal() * eta);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        if (scale[i] == 0.0) {
            out.is_infinite = true;
            out.infinite_row = i;
            out.M = kInf;
            return out;
        }
        worst = std::max(worst, A.row(i).cwiseAbs().maxCoeff() / std::abs(scale[i]));
    }
    out.M = worst + eta_inf;
    return out;
}

inline InfluenceSummary influence_constant(const SelectionEvent& event, const Vector& sigma_diag,
                                           const Vector& eta) {
    return influence_constant(event.A, sigma_diag, eta);
}

struct RateConfig {
    double delta;
    long n;
    double kappa;
    double sigma;
    long p;
};

struct SmoothedMaxParams {
    double beta = 1.0; // must be >= 1
};

// Log-sum-exp surrogate for the maximum: (1/beta) log sum exp(beta v_j),
// computed with a max shift. Satisfies max <= result <= max + log(s)/beta.
inline double smoothed_max(const std::vector<double>& values, const SmoothedMaxParams& params) {
    if (values.empty()) throw input_error("smoothed_max: empty input");
    if (!(params.beta >= 1.0)) throw input_error("smoothed_max: beta must be >= 1");
    const double top = *std::max_element(values.begin(), values.end());
    double acc = 0.0;
    for (double v : values) acc += std::exp(params.beta * (v - top));
    return top + std::log(acc) / params.beta;
}

// Constant-free kernel of the Gaussian-comparison bound:
// [(log(r |S|))^4 n M^3]^{1/5}. The multiplicative constant is unspecified,
// so values compare only within a campaign.
inline double comparison_bound_kernel(double M, double n, double r, double card_S) {
    return std::pow(std::pow(std::log(r * card_S), 4.0) * n * M * M * M, 0.2);
}

// Value of the pivot-convergence rate condition:
// delta^{-6} M^3 n (log r + log |S|)^4. Convergence requires it to vanish.
inline double rate_condition_value(const RateConfig& cfg, double M, double r, double card_S) {
    const double logs = std::log(r) + std::log(card_S);
    return std::pow(cfg.delta, -6.0) * M * M * M * static_cast<double>(cfg.n) *
           std::pow(logs, 4.0);
}

struct SparsityBound {
    double active_set_bound; // 16 Q^2 K / m^2
    double state_count_exponent; // c = 16 Q^2 / m^2, states bounded by p^{cK}
};

inline SparsityBound sparsity_bound(double Q, double m, long K) {
    if (!(Q > 0) || !(m > 0) || K < 0) throw input_error("sparsity_bound: need Q, m > 0 and K >= 0");
    const double c = 16.0 * Q * Q / (m * m);
    return {c * static_cast<double>(K), c};
}

struct SubmatrixInfluenceCheck {
    double lhs;              // max |((X_E^T X_E)^{-1} X_E^T)_{ij}|
    double rhs;              // (|E| / nu^2) max |X_{ij}|
    bool holds;
    double min_eigenvalue;   // smallest eigenvalue of X_E^T X_E
    bool precondition_met;   // min_eigenvalue >= nu^2
};

inline SubmatrixInfluenceCheck submatrix_influence_check(const DesignMatrix& X,
                                                         const std::vector<int>& E, double nu) {
    if (E.empty()) throw input_error("submatrix_influence_check: empty E");
    if (!(nu > 0)) throw input_error("submatrix_influence_check: nu must be positive");
    Matrix XE = detail::columns(X.values(), E);
    Matrix gram = XE.transpose() * XE;
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    const double phi_min = es.eigenvalues().minCoeff();

    SubmatrixInfluenceCheck out{};
    out.min_eigenvalue = phi_min;
    out.precondition_met = phi_min >= nu * nu;
    Matrix pinv = gram.ldlt().solve(XE.transpose());
    out.lhs = pinv.cwiseAbs().maxCoeff();
    out.rhs = (static_cast<double>(E.size()) / (nu * nu)) * X.values().cwiseAbs().maxCoeff();
    out.holds = out.lhs <= out.rhs + 1e-10;
    return out;
}

} // namespace selinf
