#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "selinf/events.hpp"
#include "selinf/lasso.hpp"
#include "selinf/rng.hpp"
#include "selinf/truncnorm.hpp"

using namespace selinf;

namespace {

DesignMatrix random_normalized_design(Eigen::Index n, Eigen::Index p, uint64_t seed) {
    auto gen = derive_stream(seed, StreamPurpose::design);
    std::normal_distribution<double> gauss;
    Matrix X(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) X(i, j) = gauss(gen);
    for (Eigen::Index j = 0; j < p; ++j) X.col(j) /= X.col(j).norm();
    return DesignMatrix(std::move(X), true);
}

Vector gaussian_vector(Eigen::Index n, uint64_t seed, double scale = 1.0) {
    auto gen = derive_stream(seed, StreamPurpose::errors);
    std::normal_distribution<double> gauss(0.0, scale);
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = gauss(gen);
    return y;
}

} // namespace

TEST_CASE("single-variable lasso event is a halfspace on the score") {
    Vector x = gaussian_vector(6, 5);
    x /= x.norm();
    DesignMatrix X(x, true);
    const double lambda = 0.8;

    SelectionEvent ev_pos = lasso_event(X, {0}, {1}, lambda);
    REQUIRE(ev_pos.rows() == 1);
    REQUIRE((ev_pos.A.row(0).transpose() + x).cwiseAbs().maxCoeff() <= 1e-12);
    REQUIRE(ev_pos.b[0] == Catch::Approx(-lambda).margin(1e-12));

    SelectionEvent ev_neg = lasso_event(X, {0}, {-1}, lambda);
    REQUIRE((ev_neg.A.row(0).transpose() - x).cwiseAbs().maxCoeff() <= 1e-12);
    REQUIRE(ev_neg.b[0] == Catch::Approx(-lambda).margin(1e-12));
}

TEST_CASE("lasso event matches the solver over membership probes") {
    // solver-as-oracle: y' inside the polyhedron iff re-solving reproduces (E, z_E)
    int instances = 0;
    for (uint64_t seed = 0; seed < 30; ++seed) {
        DesignMatrix X = random_normalized_design(10, 4, 300 + seed);
        Vector y = 2.0 * gaussian_vector(10, 400 + seed);
        const double lambda = 1.0;
        LassoFit fit = solve_lasso(X, y, lambda);
        if (fit.active.empty()) continue;
        ++instances;
        SelectionEvent event = lasso_event(X, fit.active, fit.signs, lambda);
        REQUIRE(event.contains(y, 1e-8));
        for (uint64_t probe = 0; probe < 100; ++probe) {
            Vector yp = 2.0 * gaussian_vector(10, 10000 + 100 * seed + probe);
            const double margin = (event.A * yp - event.b).cwiseAbs().minCoeff();
            if (margin < 1e-6) continue; // facet-adjacent probes excluded
            LassoFit refit = solve_lasso(X, yp, lambda);
            const bool same = refit.active == fit.active && refit.signs == fit.signs;
            INFO("seed " << seed << " probe " << probe);
            REQUIRE(event.contains(yp) == same);
        }
    }
    REQUIRE(instances >= 20);
}

TEST_CASE("coefficient contrast") {
    SECTION("orthonormal columns give eta = x_j") {
        DesignMatrix X(Matrix::Identity(4, 3), true);
        Vector eta = coefficient_contrast(X, {0, 2}, 2);
        REQUIRE((eta - X.values().col(2)).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SECTION("singleton active set gives x_j / ||x_j||^2") {
        Vector x = gaussian_vector(7, 9);
        DesignMatrix X(x);
        Vector eta = coefficient_contrast(X, {0}, 0);
        REQUIRE((eta - x / x.squaredNorm()).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SECTION("eta^T X_E = e_j and least-squares oracle agreement") {
        DesignMatrix X = random_normalized_design(12, 5, 17);
        std::vector<int> E{0, 2, 4};
        Vector eta = coefficient_contrast(X, E, 2);
        Matrix XE(12, 3);
        for (int k = 0; k < 3; ++k) XE.col(k) = X.values().col(E[static_cast<size_t>(k)]);
        Vector proj = XE.transpose() * eta;
        REQUIRE(std::abs(proj[0]) <= 1e-10);
        REQUIRE(std::abs(proj[1] - 1.0) <= 1e-10);
        REQUIRE(std::abs(proj[2]) <= 1e-10);

        // eta^T (X beta) equals the E-model least-squares coefficient of X beta
        Vector beta = gaussian_vector(5, 77);
        Vector target = X.values() * beta;
        Vector ls = (XE.transpose() * XE).ldlt().solve(XE.transpose() * target);
        REQUIRE(eta.dot(target) == Catch::Approx(ls[1]).margin(1e-10));
    }
    SECTION("errors") {
        DesignMatrix X = random_normalized_design(6, 3, 18);
        REQUIRE_THROWS_AS(coefficient_contrast(X, {0, 1}, 2), input_error);
        Matrix D(4, 2);
        D << 1, 1, 1, 1, 1, 1, 1, 1; // identical columns
        REQUIRE_THROWS_AS(coefficient_contrast(DesignMatrix(D), {0, 1}, 0),
                          rank_deficiency_error);
    }
}

TEST_CASE("first knot event on the identity design") {
    DesignMatrix X(Matrix::Identity(2, 2), true);
    Vector y(2);
    y << 2.0, 1.0;
    auto [event, lambda1] = first_knot_event(X, y, GlmFamily::gaussian());
    const auto& knot = std::get<KnotState>(event.label);
    REQUIRE(knot.j_star == 0);
    REQUIRE(knot.s_star == 1);
    REQUIRE(lambda1 == Catch::Approx(2.0));
    REQUIRE(event.rows() == 4);
    REQUIRE(event.contains(y));
}

TEST_CASE("bernoulli tie raises degenerate selection") {
    DesignMatrix X(Matrix::Identity(2, 2), true);
    Vector y(2);
    y << 1.0, 0.0; // |1 - 0.5| == |0 - 0.5|
    REQUIRE_THROWS_AS(first_knot_event(X, y, GlmFamily::bernoulli()), degenerate_selection_error);
}

TEST_CASE("first knot agrees with the exhaustive signed-score scan") {
    for (uint64_t seed = 0; seed < 25; ++seed) {
        DesignMatrix X = random_normalized_design(20, 6, 500 + seed);
        Vector y = gaussian_vector(20, 600 + seed);
        auto [event, lambda1] = first_knot_event(X, y, GlmFamily::gaussian());
        const auto& knot = std::get<KnotState>(event.label);

        double best = -1.0;
        int bj = -1, bs = 0;
        for (int j = 0; j < 6; ++j) {
            for (int s : {-1, 1}) {
                const double v = s * X.values().col(j).dot(y);
                if (v > best) {
                    best = v;
                    bj = j;
                    bs = s;
                }
            }
        }
        REQUIRE(knot.j_star == bj);
        REQUIRE(knot.s_star == bs);
        REQUIRE(lambda1 == Catch::Approx(best).margin(1e-12));
        REQUIRE(lambda1 == Catch::Approx((X.values().transpose() * y).cwiseAbs().maxCoeff())
                               .margin(1e-12));
        // row-by-row membership at the selecting y, zero violations beyond 1e-10
        REQUIRE(((event.A * y - event.b).array() <= 1e-10).all());
    }
}

TEST_CASE("score covariance") {
    DesignMatrix X = random_normalized_design(8, 3, 21);
    SECTION("identity cases") {
        DesignMatrix O(Matrix::Identity(4, 4), true);
        ScoreCovariance th = score_covariance(O, Vector::Ones(4));
        REQUIRE((th.theta - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-12);
        ScoreCovariance th2 = score_covariance(X, Vector::Constant(8, 2.25));
        REQUIRE((th2.theta - 2.25 * X.values().transpose() * X.values()).cwiseAbs().maxCoeff() <=
                1e-12);
    }
    SECTION("naive triple loop oracle") {
        Vector sig = gaussian_vector(8, 22).array().abs() + 0.5;
        ScoreCovariance th = score_covariance(X, sig);
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) {
                double acc = 0.0;
                for (int i = 0; i < 8; ++i) acc += X.values()(i, j) * sig[i] * X.values()(i, k);
                REQUIRE(th.theta(j, k) == Catch::Approx(acc).margin(1e-12));
            }
        REQUIRE((th.theta - th.theta.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SECTION("nonpositive variance rejected") {
        REQUIRE_THROWS_AS(score_covariance(X, Vector::Zero(8)), input_error);
    }
}

TEST_CASE("covariance test bounds") {
    SECTION("orthonormal design: U infinite, L is the second knot") {
        DesignMatrix X(Matrix::Identity(2, 2), true);
        Vector y(2);
        y << 2.0, 1.0;
        auto [event, lambda1] = first_knot_event(X, y, GlmFamily::gaussian());
        CovTestBounds b = covariance_test_bounds(X, y, Vector::Ones(2),
                                                 std::get<KnotState>(event.label),
                                                 GlmFamily::gaussian());
        REQUIRE(b.lower == Catch::Approx(1.0).margin(1e-12));
        REQUIRE(b.upper == kInf);
        REQUIRE(b.theta_jstar == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("correlated design matches the exhaustive ratio scan") {
        for (uint64_t seed = 0; seed < 20; ++seed) {
            DesignMatrix X = random_normalized_design(10, 3, 700 + seed);
            Vector y = gaussian_vector(10, 800 + seed);
            Vector sig = Vector::Constant(10, 1.3);
            auto [event, lambda1] = first_knot_event(X, y, GlmFamily::gaussian());
            const auto& knot = std::get<KnotState>(event.label);
            CovTestBounds b = covariance_test_bounds(X, y, sig, knot, GlmFamily::gaussian());

            Matrix theta = X.values().transpose() * sig.asDiagonal() * X.values();
            const double tjj = theta(knot.j_star, knot.j_star);
            double lo = -kInf, hi = kInf;
            for (int k = 0; k < 3; ++k) {
                if (k == knot.j_star) continue;
                for (int s : {-1, 1}) {
                    const double rho = theta(knot.j_star, k) / tjj;
                    const double den = 1.0 - s * knot.s_star * rho;
                    if (std::abs(den) <= 1e-12) continue;
                    Vector contrast = X.values().col(k) - rho * X.values().col(knot.j_star);
                    const double ratio = s * contrast.dot(y) / den;
                    if (den > 0)
                        lo = std::max(lo, ratio);
                    else
                        hi = std::min(hi, ratio);
                }
            }
            REQUIRE(b.lower == Catch::Approx(lo).margin(1e-10));
            if (std::isfinite(hi))
                REQUIRE(b.upper == Catch::Approx(hi).margin(1e-10));
            else
                REQUIRE(b.upper == kInf);
            // sandwich at the selecting y
            REQUIRE(b.lower <= lambda1 + 1e-9);
            REQUIRE(lambda1 <= b.upper + 1e-9);
        }
    }
}

TEST_CASE("pairwise-correlation condition keeps denominators away from zero") {
    DesignMatrix X = random_normalized_design(40, 5, 33);
    const Matrix gram = X.values().transpose() * X.values();
    double rho2 = 0.0;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            if (i != j) rho2 = std::max(rho2, std::abs(gram(i, j)));
    REQUIRE(rho2 < 1.0);
    // unit-variance Theta is the Gram matrix; every |denominator| >= 1 - rho^2
    for (uint64_t seed = 0; seed < 10; ++seed) {
        Vector y = gaussian_vector(40, 900 + seed);
        auto [event, lambda1] = first_knot_event(X, y, GlmFamily::gaussian());
        const auto& knot = std::get<KnotState>(event.label);
        for (int k = 0; k < 5; ++k) {
            if (k == knot.j_star) continue;
            for (int s : {-1, 1}) {
                const double den = 1.0 - s * knot.s_star * gram(knot.j_star, k);
                REQUIRE(std::abs(den) >= 1.0 - rho2 - 1e-12);
            }
        }
    }
}

TEST_CASE("event errors") {
    DesignMatrix X = random_normalized_design(6, 3, 44);
    REQUIRE_THROWS_AS(lasso_event(X, {}, {}, 1.0), input_error);
    Matrix one_col(3, 1);
    one_col << 1, 0, 0;
    REQUIRE_THROWS_AS(first_knot_event(DesignMatrix(one_col), Vector::Zero(3),
                                       GlmFamily::gaussian()),
                      input_error);
}
