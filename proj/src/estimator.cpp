#include "medsel/estimator.hpp"

#include "medsel/error.hpp"
#include "medsel/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace medsel {

std::string to_string(WeightVersion v) {
    switch (v) {
        case WeightVersion::ADP: return "ADP";
        case WeightVersion::PRD: return "PRD";
        case WeightVersion::NONE: return "NONE";
    }
    return "?";
}

WeightVersion weight_version_from_string(const std::string& s) {
    if (s == "ADP" || s == "adp" || s == "adaptive") return WeightVersion::ADP;
    if (s == "PRD" || s == "prd" || s == "product") return WeightVersion::PRD;
    if (s == "NONE" || s == "none" || s == "full") return WeightVersion::NONE;
    throw Error("unknown weights version '" + s + "' (expected PRD, ADP or NONE)");
}

std::vector<double> default_lambda_grid(int n, int points, double g_min, double g_max) {
    if (points < 1) throw Error("lambda grid needs at least one point");
    std::vector<double> grid;
    const double base = std::pow(static_cast<double>(n), 0.25);
    for (int i = 0; i < points; ++i) {
        const double g = points == 1 ? g_min : g_min + (g_max - g_min) * i / (points - 1);
        grid.push_back(base * std::exp2(g));
    }
    return grid;
}

TuningConfig TuningConfig::defaults(int n, int lambda_points) {
    TuningConfig cfg;
    cfg.lambda_grid = default_lambda_grid(n, lambda_points);
    cfg.kappa_grid = {0.5, 1.0, 2.0, 3.0};
    cfg.cv_folds = 10;
    return cfg;
}

void TuningConfig::validate() const {
    if (lambda_grid.empty() || kappa_grid.empty()) throw Error("tuning grids must be nonempty");
    for (double l : lambda_grid)
        if (!(l > 0.0)) throw Error("lambda grid values must be positive");
    for (double k : kappa_grid)
        if (!(k > 0.0)) throw Error("kappa grid values must be positive");
    if (cv_folds < 2) throw Error("cv_folds must be at least 2");
}

VectorXd fit_alpha(const ResidualizedData& res) {
    const double denom = res.rd.squaredNorm();
    if (!(denom > 0.0)) throw Error("no treatment variation after residualization");
    return res.rm.transpose() * res.rd / denom;
}

VectorXd fit_alpha(const ResidualizedData& res, const VectorXd& obs_weights) {
    const VectorXd grd = obs_weights.cwiseProduct(res.rd);
    const double denom = grd.dot(res.rd);
    if (!(denom > 0.0)) throw Error("no treatment variation after residualization");
    return res.rm.transpose() * grd / denom;
}

WeightVector build_weights(WeightVersion version, const VectorXd& pilot_alpha, const VectorXd& pilot_beta, double kappa) {
    if (pilot_alpha.size() != pilot_beta.size()) throw Error("pilot estimates have different lengths");
    if (!pilot_alpha.allFinite() || !pilot_beta.allFinite()) throw Error("pilot estimates must be finite");
    const Eigen::Index p = pilot_beta.size();
    WeightVector out;
    out.version = version;
    out.kappa = kappa;
    out.w = VectorXd::Zero(p + 1);
    if (version == WeightVersion::NONE) return out;
    if (!(kappa > 0.0)) throw Error("kappa must be positive");
    for (Eigen::Index j = 0; j < p; ++j) {
        const double size = version == WeightVersion::PRD ? std::abs(pilot_alpha[j] * pilot_beta[j]) : std::abs(pilot_beta[j]);
        out.w[j + 1] = size == 0.0 ? std::numeric_limits<double>::infinity() : std::pow(size, -kappa);
    }
    return out;
}

namespace {

std::vector<bool> free_mask(int p, const std::optional<MediatorSet>& restrict) {
    std::vector<bool> free(static_cast<std::size_t>(p) + 1, true);
    if (restrict) {
        if (restrict->p() != p) throw Error("restriction set has the wrong mediator dimension");
        for (int j = 0; j < p; ++j) free[static_cast<std::size_t>(j) + 1] = restrict->contains(j);
    }
    return free;
}

MediatorSet nonzero_mediators(const VectorXd& theta) {
    std::vector<int> sel;
    for (Eigen::Index j = 1; j < theta.size(); ++j)
        if (theta[j] != 0.0) sel.push_back(static_cast<int>(j) - 1);
    return MediatorSet(std::move(sel), static_cast<int>(theta.size()) - 1);
}

}  // namespace

VectorXd outcome_residuals(const ResidualizedData& res, const VectorXd& theta) {
    return res.ry - res.rd * theta[0] - res.rm * theta.tail(theta.size() - 1);
}

MatrixXd mediator_residuals(const ResidualizedData& res, const VectorXd& alpha) {
    return res.rm - res.rd * alpha.transpose();
}

VectorXd fit_weighted_lasso(const ResidualizedData& res, const WeightVector& w, double lambda,
                            const std::optional<MediatorSet>& restrict) {
    if (w.w.size() != res.p() + 1) throw Error("weight vector length must be p + 1");
    const auto sys = GramSystem::build(res.rz(), res.ry);
    return solve_lasso(sys, w.w, lambda, free_mask(res.p(), restrict)).theta;
}

TuneResult tune(const ResidualizedData& res, WeightVersion version, const VectorXd& pilot_alpha,
                const VectorXd& pilot_beta, const TuningConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const int n = res.n();
    const int p = res.p();
    const MatrixXd z = res.rz();
    const auto folds = make_folds(n, cfg.cv_folds, seed);

    std::vector<GramSystem> held_out, training;
    const auto total = GramSystem::build(z, res.ry);
    for (int f = 0; f < cfg.cv_folds; ++f) {
        std::vector<int> rows;
        for (int i = 0; i < n; ++i)
            if (folds[static_cast<std::size_t>(i)] == f) rows.push_back(i);
        MatrixXd zf(static_cast<Eigen::Index>(rows.size()), p + 1);
        VectorXd yf(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            zf.row(static_cast<Eigen::Index>(r)) = z.row(rows[r]);
            yf[static_cast<Eigen::Index>(r)] = res.ry[rows[r]];
        }
        held_out.push_back(GramSystem::build(zf, yf));
        training.push_back(total - held_out.back());
    }

    // Path from the largest lambda down, warm-started within each fold.
    std::vector<std::size_t> order(cfg.lambda_grid.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return cfg.lambda_grid[a] > cfg.lambda_grid[b]; });

    const std::vector<bool> free(static_cast<std::size_t>(p) + 1, true);
    TuneResult out;
    out.cv_error = MatrixXd::Zero(static_cast<Eigen::Index>(cfg.kappa_grid.size()),
                                  static_cast<Eigen::Index>(cfg.lambda_grid.size()));
    for (std::size_t k = 0; k < cfg.kappa_grid.size(); ++k) {
        const auto w = build_weights(version, pilot_alpha, pilot_beta, cfg.kappa_grid[k]);
        for (int f = 0; f < cfg.cv_folds; ++f) {
            VectorXd theta = VectorXd::Zero(p + 1);
            for (auto l : order) {
                theta = solve_lasso(training[static_cast<std::size_t>(f)], w.w, cfg.lambda_grid[l], free, &theta).theta;
                out.cv_error(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) +=
                    held_out[static_cast<std::size_t>(f)].rss(theta) / n;
            }
        }
    }

    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < out.cv_error.rows(); ++k) {
        for (Eigen::Index l = 0; l < out.cv_error.cols(); ++l) {
            const double e = out.cv_error(k, l);
            const double lam = cfg.lambda_grid[static_cast<std::size_t>(l)];
            const double tol = 1e-12 * std::abs(best);
            if (e < best - tol || (std::abs(e - best) <= tol && lam > out.lambda)) {
                best = std::min(best, e);
                out.lambda = lam;
                out.kappa = cfg.kappa_grid[static_cast<std::size_t>(k)];
            }
        }
    }
    return out;
}

MediationFit fit_mediation(const ResidualizedData& res, WeightVersion version, const TuningConfig& cfg,
                           std::uint64_t seed) {
    const int n = res.n();
    const int p = res.p();
    if (p >= n)
        throw Error("p >= n: the estimator requires fewer candidate mediators than observations "
                    "(high-dimensional mediator sets are not supported)");

    MediationFit out;
    out.alpha_hat = fit_alpha(res);
    const auto sys = GramSystem::build(res.rz(), res.ry);
    const std::vector<bool> free(static_cast<std::size_t>(p) + 1, true);
    const auto pilot = solve_lasso(sys, VectorXd::Zero(p + 1), 0.0, free);
    if (pilot.singular) out.warnings.push_back("singular residualized design; using the minimum-norm least-squares solution");

    if (version == WeightVersion::NONE) {
        out.theta_hat = pilot.theta;
        out.weights = build_weights(WeightVersion::NONE, out.alpha_hat, pilot.theta.tail(p), 0.0);
    } else {
        const VectorXd pilot_beta = pilot.theta.tail(p);
        const auto tuned = tune(res, version, out.alpha_hat, pilot_beta, cfg, seed);
        out.lambda = tuned.lambda;
        out.kappa = tuned.kappa;
        out.weights = build_weights(version, out.alpha_hat, pilot_beta, tuned.kappa);
        out.theta_hat = solve_lasso(sys, out.weights.w, tuned.lambda, free).theta;
    }
    out.selected = nonzero_mediators(out.theta_hat);
    out.residuals_eps = outcome_residuals(res, out.theta_hat);
    out.residuals_eta = mediator_residuals(res, out.alpha_hat);
    return out;
}

MediationFit fit_fixed_model(const ResidualizedData& res, const MediatorSet& model) {
    const int p = res.p();
    MediationFit out;
    out.alpha_hat = fit_alpha(res);
    const auto sys = GramSystem::build(res.rz(), res.ry);
    const auto sol = solve_lasso(sys, VectorXd::Zero(p + 1), 0.0, free_mask(p, model));
    if (sol.singular) out.warnings.push_back("singular residualized design; using the minimum-norm least-squares solution");
    out.theta_hat = sol.theta;
    out.weights = build_weights(WeightVersion::NONE, out.alpha_hat, sol.theta.tail(p), 0.0);
    out.selected = model;
    out.restriction = model;
    out.residuals_eps = outcome_residuals(res, out.theta_hat);
    out.residuals_eta = mediator_residuals(res, out.alpha_hat);
    return out;
}

}  // namespace medsel
