#pragma once

#include "medsel/crossfit.hpp"
#include "medsel/data.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace medsel {

enum class CoefficientRegime { Large, Small, SmallAlpha };

std::string to_string(CoefficientRegime r);
CoefficientRegime regime_from_string(const std::string& s);

struct ScenarioSpec {
    std::array<bool, 3> nonlinear{false, false, false};  // (propensity, mediator, outcome) forms
    CoefficientRegime regime = CoefficientRegime::Large;
    int n = 500;
    int p = 10;
    int q = 3;
    MediatorSet true_set{{0, 1, 2}, 10};
    double noise_sd_eps = 1.0;
    double noise_sd_eta = 1.0;
    double outcome_decoy_beta = 1.0;  // beta of the outcome-only decoy (its alpha is 0)

    /// Three letters from {L, N}, e.g. "LNN".
    std::string confounding() const;
    void set_confounding(const std::string& code);
    /// Resizes the default true set when p changes.
    void set_p(int new_p);
    void validate() const;
};

/// Coefficients at sample size n. Decoys occupy the first two coordinates
/// outside the true set: an outcome-only one (alpha 0, beta outcome_decoy_beta) and a
/// treatment-only one (alpha 1, beta 0).
struct LocalCoefficientSchedule {
    VectorXd alpha;
    VectorXd beta;
    double gamma = 1.0;
    MatrixXd rates;  // p x 2: shrinkage exponents of (alpha_j, beta_j) in n

    static LocalCoefficientSchedule build(const ScenarioSpec& spec);
};

struct GroundTruth {
    LocalCoefficientSchedule coef;
    MediatorSet true_set;
    double nde = 0.0;
    double nie = 0.0;
    // True nuisance functions at the sampled X.
    VectorXd mu_y;
    VectorXd mu_d;
    MatrixXd mu_m;
};

struct SimulatedData {
    Dataset data;
    GroundTruth truth;
};

SimulatedData generate(const ScenarioSpec& spec, std::uint64_t seed);

double propensity(const ScenarioSpec& spec, double x1, double x2);
double psi_m(const ScenarioSpec& spec, double x1, double x2, double x3);
double psi_y(const ScenarioSpec& spec, double x1, double x2, double x3);

/// RMSE of cross-fitted predictions against the true nuisance functions.
/// Rows: Y, D, M1..Mp. per_fold columns follow the fold ids.
struct NuisanceDiagnostics {
    std::vector<std::string> targets;
    VectorXd overall;
    MatrixXd per_fold;
};

NuisanceDiagnostics nuisance_diagnostics(const NuisanceFit& fit, const GroundTruth& truth);

}  // namespace medsel
