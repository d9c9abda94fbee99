#pragma once

#include "medsel/data.hpp"
#include "medsel/lasso.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace medsel {

enum class WeightVersion { ADP, PRD, NONE };

std::string to_string(WeightVersion v);
WeightVersion weight_version_from_string(const std::string& s);

/// Penalty weights over Z = (D, M). w[0] is always 0; +inf pins a coefficient to 0.
struct WeightVector {
    VectorXd w;
    WeightVersion version = WeightVersion::NONE;
    double kappa = 0.0;
};

struct TuningConfig {
    std::vector<double> lambda_grid;
    std::vector<double> kappa_grid;
    int cv_folds = 10;

    /// kappa in {0.5, 1, 2, 3}; lambda = n^(1/4) 2^g over an even grid of g on [-2, 10].
    static TuningConfig defaults(int n, int lambda_points = 101);
    void validate() const;
};

std::vector<double> default_lambda_grid(int n, int points = 101, double g_min = -2.0, double g_max = 10.0);

struct MediationFit {
    VectorXd theta_hat;  // (gamma, beta_1..beta_p)
    VectorXd alpha_hat;
    MediatorSet selected;
    double lambda = 0.0;
    double kappa = 0.0;
    WeightVector weights;
    std::optional<MediatorSet> restriction;  // set for fixed-model fits
    VectorXd residuals_eps;
    MatrixXd residuals_eta;
    std::vector<std::string> warnings;

    double gamma() const { return theta_hat[0]; }
    VectorXd beta() const { return theta_hat.tail(theta_hat.size() - 1); }
};

/// Least-squares regression of each residualized mediator on the residualized
/// treatment through the origin, optionally with observation weights.
VectorXd fit_alpha(const ResidualizedData& res);
VectorXd fit_alpha(const ResidualizedData& res, const VectorXd& obs_weights);

WeightVector build_weights(WeightVersion version, const VectorXd& pilot_alpha, const VectorXd& pilot_beta,
                           double kappa);

/// Minimizer of (1/n) sum (ry - rz theta)^2 + (lambda/n) sum w_j |theta_j|;
/// mediators outside `restrict` are held at zero.
VectorXd fit_weighted_lasso(const ResidualizedData& res, const WeightVector& w, double lambda,
                            const std::optional<MediatorSet>& restrict = std::nullopt);

struct TuneResult {
    double lambda = 0.0;
    double kappa = 0.0;
    MatrixXd cv_error;  // kappa_grid x lambda_grid, mean squared prediction error
};

/// K-fold cross-validated choice of (lambda, kappa) for the penalized outcome
/// model, weights built from the given pilots. Ties go to the larger lambda.
TuneResult tune(const ResidualizedData& res, WeightVersion version, const VectorXd& pilot_alpha,
                const VectorXd& pilot_beta, const TuningConfig& cfg, std::uint64_t seed);

/// Pilots, weights, tuning and the final penalized fit. NONE gives the
/// unpenalized full-model fit.
MediationFit fit_mediation(const ResidualizedData& res, WeightVersion version, const TuningConfig& cfg,
                           std::uint64_t seed);

/// Unpenalized fit restricted to a fixed mediator set.
MediationFit fit_fixed_model(const ResidualizedData& res, const MediatorSet& model);

/// Outcome-model residuals (ry - rz theta) and mediator-model residuals (rm - rd alpha').
VectorXd outcome_residuals(const ResidualizedData& res, const VectorXd& theta);
MatrixXd mediator_residuals(const ResidualizedData& res, const VectorXd& alpha);

}  // namespace medsel
