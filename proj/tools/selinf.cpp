#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "selinf/csv.hpp"
#include "selinf/diagnostics.hpp"
#include "selinf/events.hpp"
#include "selinf/lasso.hpp"
#include "selinf/simharness.hpp"
#include "selinf/truncnorm.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitEmptySelection = 2;
constexpr int kExitDegenerateSelection = 3;

void emit(const nlohmann::json& report, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << report.dump(2) << "\n";
    } else {
        std::ofstream out(out_path);
        if (!out) throw selinf::input_error("cannot write to " + out_path);
        out << report.dump(2) << "\n";
    }
}

int cmd_fit(const std::string& design_path, const std::string& response_path, double lambda,
            double sigma, double alpha, const std::string& out_path) {
    using namespace selinf;
    DesignMatrix X(read_csv_matrix(design_path));
    Vector y = read_csv_vector(response_path);
    if (y.size() != X.n()) throw input_error("design and response row counts disagree");
    if (!(sigma > 0)) throw input_error("--sigma must be positive");
    if (!(alpha > 0 && alpha < 1)) throw input_error("--alpha must lie in (0,1)");

    LassoFit fit = solve_lasso(X, y, lambda);
    nlohmann::json report;
    report["schema_version"] = 1;
    report["lambda"] = lambda;
    report["sigma"] = sigma;
    report["alpha"] = alpha;
    report["kkt_residual"] = fit.kkt_residual;

    nlohmann::json active = nlohmann::json::array();
    for (int j : fit.active) active.push_back(j + 1);
    report["active"] = active;
    report["signs"] = fit.signs;

    if (fit.active.empty()) {
        report["coefficients"] = nlohmann::json::array();
        emit(report, out_path);
        return kExitEmptySelection;
    }

    SelectionEvent event = lasso_event(X, fit.active, fit.signs, lambda);
    Vector sigma_diag = Vector::Constant(X.n(), sigma * sigma);
    nlohmann::json coefs = nlohmann::json::array();
    double M_max = 0.0;
    for (int j : fit.active) {
        Vector eta = coefficient_contrast(X, fit.active, j);
        auto [iv, geom] = truncation_interval(event, sigma_diag, eta, y);
        const double obs = eta.dot(y);
        const double pvalue = two_sided_pivot(PivotInputs{obs, geom.eta_variance, 0.0, iv});
        auto [lo, hi] = invert_pivot_interval(event, sigma_diag, eta, y, alpha);
        InfluenceSummary inf = influence_constant(event, sigma_diag, eta);
        M_max = std::max(M_max, inf.M);
        coefs.push_back(nlohmann::json{{"index", j + 1},
                                       {"estimate", obs},
                                       {"pvalue", pvalue},
                                       {"interval", {lo, hi}},
                                       {"truncation", {iv.lower, iv.upper}}});
    }
    report["coefficients"] = coefs;
    report["diagnostics"] = nlohmann::json{{"M", M_max}, {"r", event.rows()}};
    emit(report, out_path);
    return kExitOk;
}

int cmd_covtest(const std::string& design_path, const std::string& response_path,
                const std::string& family_name, double sigma, const std::string& out_path) {
    using namespace selinf;
    DesignMatrix X(read_csv_matrix(design_path));
    Vector y = read_csv_vector(response_path);
    if (y.size() != X.n()) throw input_error("design and response row counts disagree");
    GlmFamily family = GlmFamily::by_name(family_name);
    const double var = family.name == "gaussian" ? sigma * sigma : family.null_variance;
    Vector sigma_diag = Vector::Constant(X.n(), var);

    auto [event, lambda1] = first_knot_event(X, y, family);
    const auto& knot = std::get<KnotState>(event.label);
    CovTestBounds bounds = covariance_test_bounds(X, y, sigma_diag, knot, family);
    const double pvalue = covtest_pvalue(lambda1, bounds);

    nlohmann::json report;
    report["schema_version"] = 1;
    report["family"] = family.name;
    report["j_star"] = knot.j_star + 1;
    report["s_star"] = knot.s_star;
    report["lambda1"] = lambda1;
    report["lower"] = std::isfinite(bounds.lower) ? nlohmann::json(bounds.lower)
                                                  : nlohmann::json("-inf");
    report["upper"] = std::isfinite(bounds.upper) ? nlohmann::json(bounds.upper)
                                                  : nlohmann::json("inf");
    report["pvalue"] = pvalue;
    report["theta_jstar"] = bounds.theta_jstar;
    report["skipped_zero_denominators"] = bounds.skipped_zero_denominators;
    emit(report, out_path);
    return kExitOk;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir, int workers,
                 long seed_override) {
    using namespace selinf;
    std::ifstream in(config_path);
    if (!in) throw input_error("cannot open file: " + config_path);
    nlohmann::json raw = nlohmann::json::parse(in);
    SimulationConfig cfg = config_from_json(raw);
    if (seed_override >= 0) cfg.seed = static_cast<uint64_t>(seed_override);

    SimulationReport report = run_campaign(cfg, workers);

    const std::string report_path = out_dir + "/report.json";
    const std::string pivots_path = out_dir + "/pivots.csv";
    {
        std::ofstream out(report_path);
        if (!out) throw input_error("cannot write to " + report_path);
        out << to_json(report).dump(2) << "\n";
    }
    {
        std::ofstream out(pivots_path);
        if (!out) throw input_error("cannot write to " + pivots_path);
        out << "pivot\n";
        char buf[64];
        for (double u : report.pivots) {
            std::snprintf(buf, sizeof(buf), "%.17g", u);
            out << buf << "\n";
        }
    }
    std::cerr << "wrote " << report_path << " and " << pivots_path << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Selective inference for affine selection events"};
    app.require_subcommand(1);

    std::string design_path, response_path, out_path, family_name = "gaussian";
    std::string config_path, out_dir = ".";
    double lambda = 1.0, sigma = 1.0, alpha = 0.05;
    int workers = 1;
    long seed_override = -1;

    auto* fit = app.add_subcommand("fit", "LASSO fit with selective p-values and intervals");
    fit->add_option("--design", design_path, "design matrix CSV")->required();
    fit->add_option("--response", response_path, "response CSV (one column)")->required();
    fit->add_option("--lambda", lambda, "penalty level")->required();
    fit->add_option("--sigma", sigma, "known noise scale")->required();
    fit->add_option("--alpha", alpha, "interval level (default 0.05)");
    fit->add_option("--out", out_path, "report path (default stdout)");

    auto* cov = app.add_subcommand("covtest", "first-knot covariance test (global null)");
    cov->add_option("--design", design_path, "design matrix CSV")->required();
    cov->add_option("--response", response_path, "response CSV (one column)")->required();
    cov->add_option("--family", family_name, "gaussian | bernoulli | poisson");
    cov->add_option("--sigma", sigma, "noise scale (gaussian family)");
    cov->add_option("--out", out_path, "report path (default stdout)");

    auto* sim = app.add_subcommand("simulate", "run a Monte Carlo campaign from a config file");
    sim->add_option("config", config_path, "JSON config path")->required();
    sim->add_option("--out", out_dir, "output directory (default .)");
    sim->add_option("--workers", workers, "worker thread count (default 1)");
    sim->add_option("--seed", seed_override, "override the config seed");

    try {
        app.parse(argc, argv);
        if (fit->parsed()) return cmd_fit(design_path, response_path, lambda, sigma, alpha, out_path);
        if (cov->parsed()) return cmd_covtest(design_path, response_path, family_name, sigma, out_path);
        return cmd_simulate(config_path, out_dir, workers, seed_override);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const selinf::degenerate_selection_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDegenerateSelection;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    }
}
