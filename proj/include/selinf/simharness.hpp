#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "selinf/design.hpp"
#include "selinf/diagnostics.hpp"
#include "selinf/events.hpp"
#include "selinf/families.hpp"
#include "selinf/lasso.hpp"
#include "selinf/rng.hpp"
#include "selinf/truncnorm.hpp"

namespace selinf {

struct LambdaRule {
    enum class Kind { fixed, four_sigma_sqrt_log_p } kind = Kind::fixed;
    double value = 1.0; // fixed only

    double resolve(double sigma, long p) const {
        if (kind == Kind::fixed) return value;
        return 4.0 * sigma * std::sqrt(std::log(static_cast<double>(p)));
    }
};

struct SimulationConfig {
    long n = 0, p = 0;
    std::string design = "row_iid_normal_column_normalized"; // | orthonormal | user_csv
    Vector beta0;
    long sparsity = 0; // K, number of nonzeros in beta0
    LambdaRule lambda_rule;
    ErrorFamily family{"gaussian", 1.0};
    long replications = 0;
    uint64_t seed = 0;
    std::string experiment = "lasso_pivot"; // | covtest_pivot
    std::string target = "true_mean";       // | zero_null
    // diagnostics-only knobs
    double delta = 0.1;
    double kappa = 0.1;
    double alpha = 0.05;            // interval level for coverage
    bool compute_intervals = false; // lasso_pivot only
    std::optional<Matrix> user_design; // design == user_csv

    void validate() const {
        if (n < 1 || p < 1) throw input_error("SimulationConfig: n, p must be >= 1");
        if (replications < 1) throw input_error("SimulationConfig: replications must be >= 1");
        if (beta0.size() != p) throw input_error("SimulationConfig: beta0 must have length p");
        long nz = 0;
        for (Eigen::Index j = 0; j < beta0.size(); ++j)
            if (beta0[j] != 0.0) ++nz;
        if (nz != sparsity) throw input_error("SimulationConfig: sparsity does not match beta0");
        if (design != "row_iid_normal_column_normalized" && design != "orthonormal" &&
            design != "user_csv")
            throw input_error("SimulationConfig: unknown design '" + design + "'");
        if (design == "orthonormal" && p > n)
            throw input_error("SimulationConfig: orthonormal design needs p <= n");
        if (design == "user_csv" && !user_design)
            throw input_error("SimulationConfig: user_csv design requires a matrix");
        if (experiment != "lasso_pivot" && experiment != "covtest_pivot")
            throw input_error("SimulationConfig: unknown experiment '" + experiment + "'");
        if (target != "true_mean" && target != "zero_null")
            throw input_error("SimulationConfig: unknown target '" + target + "'");
        family.validate();
    }
};

struct DiagnosticsSummary {
    double M_max = 0.0;
    double M_median = 0.0;
    long infinite_M_count = 0;
    Eigen::Index r_max = 0;
    size_t observed_state_count = 0;
    double width_violation_rate = 0.0;
    double distance_violation_rate = 0.0;
    double rate_condition = 0.0;
    double comparison_kernel = 0.0;
};

struct SimulationReport {
    std::vector<double> pivots;
    double ks_statistic = 0.0;
    double rejection_rate_at_05 = 0.0;
    std::optional<double> coverage_rate;
    DiagnosticsSummary diagnostics;
    std::map<std::string, long> selected_counts;
    long skipped_empty_selection = 0;
    long tie_resamples = 0;
    long sandwich_violations = 0;
    long replications_run = 0;
    uint64_t seed = 0;
    SimulationConfig config;
};

// Exact sup-distance between the empirical CDF of the sample and the
// identity on [0,1].
inline double ks_statistic(std::vector<double> pivots) {
    if (pivots.empty()) throw input_error("ks_statistic: empty sample");
    for (double u : pivots)
        if (!(u >= 0.0 && u <= 1.0)) throw input_error("ks_statistic: value outside [0,1]");
    std::sort(pivots.begin(), pivots.end());
    const double N = static_cast<double>(pivots.size());
    double d = 0.0;
    for (size_t i = 0; i < pivots.size(); ++i) {
        const double hi = (static_cast<double>(i) + 1.0) / N - pivots[i];
        const double lo = pivots[i] - static_cast<double>(i) / N;
        d = std::max(d, std::max(hi, lo));
    }
    return d;
}

inline DesignMatrix generate_design(const SimulationConfig& cfg) {
    if (cfg.design == "user_csv") return DesignMatrix(*cfg.user_design);
    auto gen = derive_stream(cfg.seed, StreamPurpose::design);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix X(cfg.n, cfg.p);
    // row-major fill so the stream is a pure function of (seed, n, p)
    for (long i = 0; i < cfg.n; ++i)
        for (long j = 0; j < cfg.p; ++j) X(i, j) = gauss(gen);
    if (cfg.design == "orthonormal") {
        Eigen::HouseholderQR<Matrix> qr(X);
        Matrix Q = qr.householderQ() * Matrix::Identity(cfg.n, cfg.p);
        return DesignMatrix(std::move(Q));
    }
    for (long j = 0; j < cfg.p; ++j) X.col(j) /= X.col(j).norm();
    return DesignMatrix(std::move(X), true);
}

// Pre-normalization column norms of the generated design. Coefficients in the
// config are stated on the raw-design scale; the solver sees the normalized
// columns, so the mean vector is X_normalized * (scales .* beta0).
inline Vector design_column_scales(const SimulationConfig& cfg) {
    if (cfg.design != "row_iid_normal_column_normalized") return Vector::Ones(cfg.p);
    auto gen = derive_stream(cfg.seed, StreamPurpose::design);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix X(cfg.n, cfg.p);
    for (long i = 0; i < cfg.n; ++i)
        for (long j = 0; j < cfg.p; ++j) X(i, j) = gauss(gen);
    Vector scales(cfg.p);
    for (long j = 0; j < cfg.p; ++j) scales[j] = X.col(j).norm();
    return scales;
}

namespace detail {

struct RepOutcome {
    bool usable = false;
    bool skipped_empty = false;
    long tie_resamples = 0;
    double pivot = 0.0;
    TruncationInterval interval;
    double observed = 0.0; // eta^T y (lasso) or lambda_1 (covtest)
    InfluenceSummary influence;
    std::string label;
    std::optional<bool> covered;
    bool sandwich_ok = true;
};

inline RepOutcome run_lasso_replication(const SimulationConfig& cfg, const DesignMatrix& X,
                                        const Vector& mean_vec, double lambda, uint64_t rep) {
    RepOutcome out;
    auto gen = derive_stream(cfg.seed, StreamPurpose::errors, rep);
    Vector y = mean_vec + draw_errors(cfg.family, cfg.n, gen);
    LassoFit fit = solve_lasso(X, y, lambda);
    if (fit.active.empty()) {
        out.skipped_empty = true;
        return out;
    }
    SelectionEvent event = lasso_event(X, fit.active, fit.signs, lambda);
    const int j = fit.active.front(); // smallest selected index
    Vector eta = coefficient_contrast(X, fit.active, j);
    Vector sigma_diag = Vector::Constant(cfg.n, cfg.family.variance);

    auto [iv, geom] = truncation_interval(event, sigma_diag, eta, y);
    const double obs = eta.dot(y);
    const double mean = cfg.target == "true_mean" ? eta.dot(mean_vec) : 0.0;
    out.pivot = two_sided_pivot(PivotInputs{obs, geom.eta_variance, mean, iv});
    out.interval = iv;
    out.observed = obs;
    out.sandwich_ok = iv.lower <= obs + 1e-9 && obs - 1e-9 <= iv.upper;
    out.influence = influence_constant(event, sigma_diag, eta);
    std::ostringstream lab;
    lab << "E";
    for (size_t k = 0; k < fit.active.size(); ++k)
        lab << (fit.signs[k] > 0 ? '+' : '-') << fit.active[k] + 1;
    out.label = lab.str();
    if (cfg.compute_intervals) {
        auto [lo, hi] = invert_pivot_interval(event, sigma_diag, eta, y, cfg.alpha);
        const double truth = eta.dot(mean_vec);
        out.covered = lo <= truth && truth <= hi;
    }
    out.usable = true;
    return out;
}

inline RepOutcome run_covtest_replication(const SimulationConfig& cfg, const DesignMatrix& X,
                                          const Vector& mean_vec, uint64_t rep) {
    RepOutcome out;
    Vector sigma_diag = Vector::Constant(cfg.n, cfg.family.variance);
    const GlmFamily null_family = GlmFamily::gaussian(); // centered errors: null mean 0
    for (uint64_t attempt = 0;; ++attempt) {
        if (attempt >= 100)
            throw numeric_error("covtest replication: 100 consecutive tied selections");
        auto gen = derive_stream(cfg.seed, StreamPurpose::errors, rep, attempt);
        Vector y = mean_vec + draw_errors(cfg.family, cfg.n, gen);
        try {
            auto [event, lambda1] = first_knot_event(X, y, null_family);
            const auto& knot = std::get<KnotState>(event.label);
            CovTestBounds bounds = covariance_test_bounds(X, y, sigma_diag, knot, null_family);
            out.pivot = covtest_pvalue(lambda1, bounds);
            out.interval = TruncationInterval{bounds.lower, bounds.upper};
            out.observed = lambda1;
            out.sandwich_ok = bounds.lower <= lambda1 + 1e-9 && lambda1 - 1e-9 <= bounds.upper;
            Vector eta = knot.s_star * X.values().col(knot.j_star);
            out.influence = influence_constant(event, sigma_diag, eta);
            std::ostringstream lab;
            lab << "j" << knot.j_star + 1 << (knot.s_star > 0 ? '+' : '-');
            out.label = lab.str();
            out.usable = true;
            return out;
        } catch (const degenerate_selection_error&) {
            ++out.tie_resamples;
        }
    }
}

} // namespace detail

// Monte Carlo campaign: replications are evaluated in fixed-size chunks in
// index order; inside a chunk workers share the indices round-robin and
// write to per-index slots, so the report is identical for any worker count.
inline SimulationReport run_campaign(const SimulationConfig& cfg, int workers = 1) {
    cfg.validate();
    if (workers < 1) throw input_error("run_campaign: workers must be >= 1");
    DesignMatrix X = generate_design(cfg);
    Vector mean_vec = X.values() * design_column_scales(cfg).cwiseProduct(cfg.beta0);
    const double lambda = cfg.lambda_rule.resolve(cfg.family.sigma(), cfg.p);
    const long cap = 10 * cfg.replications;
    const long chunk = 64;

    std::vector<detail::RepOutcome> outcomes;
    outcomes.reserve(static_cast<size_t>(cfg.replications));
    long usable = 0;
    long next = 0;
    while (usable < cfg.replications && next < cap) {
        const long hi = std::min(next + chunk, cap);
        std::vector<detail::RepOutcome> slot(static_cast<size_t>(hi - next));
        auto work = [&](int w) {
            for (long i = next + w; i < hi; i += workers) {
                slot[static_cast<size_t>(i - next)] =
                    cfg.experiment == "lasso_pivot"
                        ? detail::run_lasso_replication(cfg, X, mean_vec, lambda,
                                                        static_cast<uint64_t>(i))
                        : detail::run_covtest_replication(cfg, X, mean_vec,
                                                          static_cast<uint64_t>(i));
            }
        };
        if (workers == 1) {
            work(0);
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
            for (auto& t : pool) t.join();
        }
        for (auto& o : slot) {
            if (usable >= cfg.replications) break;
            outcomes.push_back(std::move(o));
            if (outcomes.back().usable) ++usable;
            ++next;
        }
        if (usable >= cfg.replications) break;
        next = std::max(next, hi); // all of the chunk consumed
    }

    SimulationReport rep;
    rep.config = cfg;
    rep.seed = cfg.seed;
    rep.replications_run = static_cast<long>(outcomes.size());

    std::vector<TruncationInterval> intervals;
    std::vector<double> finite_M;
    std::map<std::string, long> labels;
    long covered = 0, with_interval = 0;
    for (const auto& o : outcomes) {
        rep.tie_resamples += o.tie_resamples;
        if (o.skipped_empty) ++rep.skipped_empty_selection;
        if (!o.usable) continue;
        if (!o.sandwich_ok) ++rep.sandwich_violations;
        rep.pivots.push_back(o.pivot);
        intervals.push_back(o.interval);
        ++labels[o.label];
        if (o.influence.is_infinite)
            ++rep.diagnostics.infinite_M_count;
        else
            finite_M.push_back(o.influence.M);
        rep.diagnostics.r_max = std::max(rep.diagnostics.r_max, o.influence.r);
        if (o.covered) {
            ++with_interval;
            if (*o.covered) ++covered;
        }
    }
    if (rep.pivots.size() < 10)
        throw numeric_error("run_campaign: fewer than 10 usable pivots; adjust lambda or beta0",
                            static_cast<double>(rep.pivots.size()));

    rep.selected_counts = labels;
    rep.ks_statistic = ks_statistic(rep.pivots);
    long rejects = 0;
    for (double u : rep.pivots)
        if (u <= 0.05) ++rejects;
    rep.rejection_rate_at_05 = static_cast<double>(rejects) / static_cast<double>(rep.pivots.size());
    if (with_interval > 0)
        rep.coverage_rate = static_cast<double>(covered) / static_cast<double>(with_interval);

    auto& d = rep.diagnostics;
    d.observed_state_count = labels.size();
    if (!finite_M.empty()) {
        d.M_max = *std::max_element(finite_M.begin(), finite_M.end());
        std::sort(finite_M.begin(), finite_M.end());
        d.M_median = finite_M[finite_M.size() / 2];
    }
    auto [wv, dv] = delta_assumption_check(intervals, DeltaCheckConfig{cfg.delta});
    d.width_violation_rate = wv;
    d.distance_violation_rate = dv;
    const double r = std::max<double>(1.0, static_cast<double>(d.r_max));
    const double cardS = static_cast<double>(std::max<size_t>(2, d.observed_state_count));
    d.comparison_kernel =
        comparison_bound_kernel(d.M_median, static_cast<double>(cfg.n), r, cardS);
    d.rate_condition = rate_condition_value(
        RateConfig{cfg.delta, cfg.n, cfg.kappa, cfg.family.sigma(), cfg.p}, d.M_median, r, cardS);
    return rep;
}

// --- JSON serialization -----------------------------------------------------

inline nlohmann::json to_json(const SimulationConfig& cfg) {
    nlohmann::json j;
    j["n"] = cfg.n;
    j["p"] = cfg.p;
    j["design"] = cfg.design;
    j["beta0"] = std::vector<double>(cfg.beta0.data(), cfg.beta0.data() + cfg.beta0.size());
    j["sparsity"] = cfg.sparsity;
    if (cfg.lambda_rule.kind == LambdaRule::Kind::fixed)
        j["lambda_rule"] = nlohmann::json{{"fixed", cfg.lambda_rule.value}};
    else
        j["lambda_rule"] = "four_sigma_sqrt_log_p";
    j["family"] = nlohmann::json{{"name", cfg.family.name}, {"variance", cfg.family.variance}};
    if (cfg.family.name == "student_t") j["family"]["df"] = cfg.family.df;
    j["replications"] = cfg.replications;
    j["seed"] = cfg.seed;
    j["experiment"] = cfg.experiment;
    j["target"] = cfg.target;
    j["delta"] = cfg.delta;
    j["kappa"] = cfg.kappa;
    j["alpha"] = cfg.alpha;
    j["compute_intervals"] = cfg.compute_intervals;
    return j;
}

inline SimulationConfig config_from_json(const nlohmann::json& j) {
    SimulationConfig cfg;
    auto require = [&](const char* key) {
        if (!j.contains(key)) throw input_error(std::string("config: missing key `") + key + "`");
        return j.at(key);
    };
    cfg.n = require("n").get<long>();
    cfg.p = require("p").get<long>();
    cfg.design = require("design").get<std::string>();
    auto b0 = require("beta0").get<std::vector<double>>();
    cfg.beta0 = Eigen::Map<Vector>(b0.data(), static_cast<Eigen::Index>(b0.size()));
    cfg.sparsity = require("sparsity").get<long>();
    const auto& lr = require("lambda_rule");
    if (lr.is_string() && lr.get<std::string>() == "four_sigma_sqrt_log_p") {
        cfg.lambda_rule.kind = LambdaRule::Kind::four_sigma_sqrt_log_p;
    } else if (lr.is_object() && lr.contains("fixed")) {
        cfg.lambda_rule.kind = LambdaRule::Kind::fixed;
        cfg.lambda_rule.value = lr.at("fixed").get<double>();
    } else {
        throw input_error("config: invalid `lambda_rule`");
    }
    const auto& fam = require("family");
    cfg.family.name = fam.at("name").get<std::string>();
    cfg.family.variance = fam.value("variance", 1.0);
    cfg.family.df = fam.value("df", 0.0);
    cfg.replications = require("replications").get<long>();
    if (cfg.replications < 1) throw input_error("config: `replications` must be >= 1");
    cfg.seed = require("seed").get<uint64_t>();
    cfg.experiment = require("experiment").get<std::string>();
    cfg.target = j.value("target", std::string("true_mean"));
    cfg.delta = j.value("delta", 0.1);
    cfg.kappa = j.value("kappa", 0.1);
    cfg.alpha = j.value("alpha", 0.05);
    cfg.compute_intervals = j.value("compute_intervals", false);
    cfg.validate();
    return cfg;
}

inline nlohmann::json to_json(const SimulationReport& rep) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["seed"] = rep.seed;
    j["config"] = to_json(rep.config);
    j["pivots"] = rep.pivots;
    j["ks_statistic"] = rep.ks_statistic;
    j["rejection_rate_at_05"] = rep.rejection_rate_at_05;
    if (rep.coverage_rate) j["coverage_rate"] = *rep.coverage_rate;
    j["selected_counts"] = rep.selected_counts;
    j["skipped_empty_selection"] = rep.skipped_empty_selection;
    j["sandwich_violations"] = rep.sandwich_violations;
    j["tie_resamples"] = rep.tie_resamples;
    j["replications_run"] = rep.replications_run;
    j["usable_pivots"] = rep.pivots.size();
    const auto& d = rep.diagnostics;
    j["diagnostics"] = nlohmann::json{{"M_max", d.M_max},
                                      {"M_median", d.M_median},
                                      {"infinite_M_count", d.infinite_M_count},
                                      {"r_max", d.r_max},
                                      {"observed_state_count", d.observed_state_count},
                                      {"width_violation_rate", d.width_violation_rate},
                                      {"distance_violation_rate", d.distance_violation_rate},
                                      {"rate_condition", d.rate_condition},
                                      {"comparison_kernel", d.comparison_kernel}};
    return j;
}

} // namespace selinf
