#pragma once

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "selinf/design.hpp"
#include "selinf/errors.hpp"

namespace selinf {

// State labels for the two selection procedures.
struct LassoState {
    std::vector<int> active; // E, ascending 0-based
    std::vector<int> signs;  // z_E
    bool operator==(const LassoState&) const = default;
};
struct KnotState {
    int j_star = 0; // 0-based winning coordinate
    int s_star = 1; // sign of the winning score
    bool operator==(const KnotState&) const = default;
};

// The polyhedron {y : A y <= b} carrying its state label. Membership uses
// non-strict inequalities with 1e-10 slack (boundaries have measure zero).
struct SelectionEvent {
    Matrix A; // k x n
    Vector b; // k
    std::variant<LassoState, KnotState> label;

    bool contains(const Vector& y, double slack = 1e-10) const {
        if (y.size() != A.cols()) throw input_error("SelectionEvent::contains: bad y length");
        return ((A * y - b).array() <= slack).all();
    }
    Eigen::Index rows() const { return A.rows(); }
};

// Canonical exponential families, reduced to their null mean and variance.
struct GlmFamily {
    std::string name;     // gaussian | bernoulli | poisson
    double null_mean;     // grad of the cumulant at 0
    double null_variance; // second derivative at 0

    static GlmFamily gaussian() { return {"gaussian", 0.0, 1.0}; }
    static GlmFamily bernoulli() { return {"bernoulli", 0.5, 0.25}; }
    static GlmFamily poisson() { return {"poisson", 1.0, 1.0}; }

    static GlmFamily by_name(const std::string& s) {
        if (s == "gaussian") return gaussian();
        if (s == "bernoulli") return bernoulli();
        if (s == "poisson") return poisson();
        throw input_error("GlmFamily: unknown family '" + s + "'");
    }
};

struct ScoreCovariance {
    Matrix theta; // p x p, Theta_jk = x_j^T Sigma x_k
};

namespace detail {

// SPD inverse of X_E^T X_E with a condition-number gate at 1e12.
inline Matrix gram_inverse(const Matrix& XE) {
    Matrix gram = XE.transpose() * XE;
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e12)
        throw rank_deficiency_error("singular Gram matrix for the selected columns",
                                    lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity());
    return es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
           es.eigenvectors().transpose();
}

inline Matrix columns(const Matrix& X, const std::vector<int>& idx) {
    Matrix out(X.rows(), static_cast<Eigen::Index>(idx.size()));
    for (size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = X.col(idx[k]);
    return out;
}

} // namespace detail

// Affine event for the LASSO selection (E, z_E) at penalty lambda. Rows:
// first the |E| sign constraints -diag(z)(X_E^T X_E)^{-1} X_E^T y <= -lambda
// diag(z)(X_E^T X_E)^{-1} z, then for every j not in E the two inactive
// KKT constraints +-x_j^T (I - P_E) y <= lambda (1 -+ x_j^T X_E (X_E^T X_E)^{-1} z).
inline SelectionEvent lasso_event(const DesignMatrix& X, const std::vector<int>& E,
                                  const std::vector<int>& z_E, double lambda) {
    if (E.empty()) throw input_error("lasso_event: empty active set");
    if (E.size() != z_E.size()) throw input_error("lasso_event: |E| != |z_E|");
    const Matrix& Xv = X.values();
    const Eigen::Index n = Xv.rows(), p = Xv.cols();
    Matrix XE = detail::columns(Xv, E);
    Matrix Ginv = detail::gram_inverse(XE);

    Vector z(static_cast<Eigen::Index>(z_E.size()));
    for (size_t k = 0; k < z_E.size(); ++k) z[static_cast<Eigen::Index>(k)] = z_E[k];

    const Eigen::Index m = XE.cols();
    const Eigen::Index k_total = m + 2 * (p - m);
    Matrix A(k_total, n);
    Vector b(k_total);

    Matrix pinv = Ginv * XE.transpose(); // (X_E^T X_E)^{-1} X_E^T
    A.topRows(m) = -(z.asDiagonal() * pinv);
    b.head(m) = -lambda * (z.asDiagonal() * (Ginv * z));

    if (p > m) {
        std::vector<bool> in_E(static_cast<size_t>(p), false);
        for (int j : E) in_E[static_cast<size_t>(j)] = true;
        Matrix proj = Matrix::Identity(n, n) - XE * pinv; // I - P_E
        Vector w = XE * (Ginv * z);                       // X_E (X_E^T X_E)^{-1} z
        Eigen::Index row = m;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (in_E[static_cast<size_t>(j)]) continue;
            Vector aj = proj.transpose() * Xv.col(j); // x_j^T (I - P_E) as a column
            const double c = Xv.col(j).dot(w);
            A.row(row) = aj.transpose();
            b[row] = lambda * (1.0 - c);
            ++row;
            A.row(row) = -aj.transpose();
            b[row] = lambda * (1.0 + c);
            ++row;
        }
    }
    return SelectionEvent{std::move(A), std::move(b), LassoState{E, z_E}};
}

// eta = X_E (X_E^T X_E)^{-1} e_j, the contrast whose mean is the j-th
// selected-model coefficient. `j` is a 0-based column index, must lie in E.
inline Vector coefficient_contrast(const DesignMatrix& X, const std::vector<int>& E, int j) {
    auto it = std::find(E.begin(), E.end(), j);
    if (it == E.end()) throw input_error("coefficient_contrast: j not in E");
    Matrix XE = detail::columns(X.values(), E);
    Matrix Ginv = detail::gram_inverse(XE);
    Vector ej = Vector::Zero(XE.cols());
    ej[std::distance(E.begin(), it)] = 1.0;
    return XE * (Ginv * ej);
}

// First-knot selection for the l1-penalized GLM at the global null:
// j* = argmax_j |x_j^T (y - m 1)|, s* its sign, lambda_1 the winning score.
// The event is the 2p-row stack of (x_k - s* x_j*)^T y and
// (-x_k - s* x_j*)^T y constraints with the matching null-mean offsets.
inline std::pair<SelectionEvent, double> first_knot_event(const DesignMatrix& X, const Vector& y,
                                                          const GlmFamily& family) {
    const Matrix& Xv = X.values();
    const Eigen::Index n = Xv.rows(), p = Xv.cols();
    if (p < 2) throw input_error("first_knot_event: need p >= 2");
    if (y.size() != n) throw input_error("first_knot_event: y has wrong length");

    Vector centered = y.array() - family.null_mean;
    Vector scores = Xv.transpose() * centered;

    Eigen::Index jstar = 0;
    scores.cwiseAbs().maxCoeff(&jstar);
    const double top = std::abs(scores[jstar]);
    for (Eigen::Index j = 0; j < p; ++j) {
        if (j != jstar && std::abs(std::abs(scores[j]) - top) <= 1e-12 * std::max(1.0, top))
            throw degenerate_selection_error("first_knot_event: tied argmax between columns " +
                                             std::to_string(jstar + 1) + " and " +
                                             std::to_string(j + 1));
    }
    const int sstar = scores[jstar] >= 0 ? 1 : -1;
    const double lambda1 = sstar * scores[jstar];

    Vector mean_vec = Vector::Constant(n, family.null_mean);
    Matrix A(2 * p, n);
    Vector b(2 * p);
    Eigen::VectorXd xj = Xv.col(jstar);
    for (Eigen::Index k = 0; k < p; ++k) {
        Vector row_plus = Xv.col(k) - sstar * xj;
        Vector row_minus = -Xv.col(k) - sstar * xj;
        A.row(k) = row_plus.transpose();
        b[k] = row_plus.dot(mean_vec);
        A.row(p + k) = row_minus.transpose();
        b[p + k] = row_minus.dot(mean_vec);
    }
    return {SelectionEvent{std::move(A), std::move(b),
                           KnotState{static_cast<int>(jstar), sstar}},
            lambda1};
}

// Theta = X^T Sigma X with Sigma = diag(sigma_diag).
inline ScoreCovariance score_covariance(const DesignMatrix& X, const Vector& sigma_diag) {
    const Matrix& Xv = X.values();
    if (sigma_diag.size() != Xv.rows()) throw input_error("score_covariance: bad sigma_diag length");
    if ((sigma_diag.array() <= 0.0).any()) throw input_error("score_covariance: nonpositive variance");
    return ScoreCovariance{Xv.transpose() * sigma_diag.asDiagonal() * Xv};
}

struct CovTestBounds {
    double lower; // -inf when no positive-denominator term exists
    double upper; // +inf when no negative-denominator term exists
    int skipped_zero_denominators = 0;
    double theta_jstar = 0.0;
};

// Truncation bounds for the first-knot statistic: over s in {-1,+1} and
// k != j*, the ratio s (x_k - (Theta_j*k/Theta_j*j*) x_j*)^T (y - mu) over
// 1 - s s* Theta_j*k/Theta_j*j*; sup of the positive-denominator terms is
// the lower bound, inf of the negative-denominator terms the upper.
inline CovTestBounds covariance_test_bounds(const DesignMatrix& X, const Vector& y,
                                            const Vector& sigma_diag, const KnotState& knot,
                                            const GlmFamily& family) {
    const Matrix& Xv = X.values();
    const Eigen::Index p = Xv.cols();
    ScoreCovariance theta = score_covariance(X, sigma_diag);
    const double tjj = theta.theta(knot.j_star, knot.j_star);
    if (!(tjj > 0)) throw input_error("covariance_test_bounds: Theta_{j*j*} <= 0");

    Vector centered = y.array() - family.null_mean;
    Vector scores = Xv.transpose() * centered; // x_k^T (y - mu)
    const double score_star = scores[knot.j_star];

    CovTestBounds out{-std::numeric_limits<double>::infinity(),
                      std::numeric_limits<double>::infinity(), 0, tjj};
    for (Eigen::Index k = 0; k < p; ++k) {
        if (k == knot.j_star) continue;
        const double ratio_theta = theta.theta(knot.j_star, k) / tjj;
        const double numer_base = scores[k] - ratio_theta * score_star;
        for (int s : {-1, 1}) {
            const double denom = 1.0 - s * knot.s_star * ratio_theta;
            if (std::abs(denom) <= 1e-12) {
                ++out.skipped_zero_denominators;
                continue;
            }
            const double ratio = s * numer_base / denom;
            if (denom > 0)
                out.lower = std::max(out.lower, ratio);
            else
                out.upper = std::min(out.upper, ratio);
        }
    }
    return out;
}

} // namespace selinf
