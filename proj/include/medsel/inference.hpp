#pragma once

#include "medsel/data.hpp"
#include "medsel/estimator.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace medsel {

/// Distribution of the observation multipliers G_i (mean 1, variance 1).
enum class PerturbationDistribution { Exponential, TwoPoint };
enum class BootstrapInterval { Basic, Percentile };
enum class IntervalMethod { PerturbationBootstrap, DeltaMethod };

std::string to_string(PerturbationDistribution d);
PerturbationDistribution perturbation_from_string(const std::string& s);
std::string to_string(BootstrapInterval b);
BootstrapInterval bootstrap_interval_from_string(const std::string& s);
std::string to_string(IntervalMethod m);

struct PerturbationScheme {
    PerturbationDistribution distribution = PerturbationDistribution::Exponential;
    int B = 1000;
    std::uint64_t seed = 0;
    BootstrapInterval interval = BootstrapInterval::Basic;
    int threads = 1;
};

/// n i.i.d. multipliers from the scheme's distribution.
VectorXd draw_perturbation(PerturbationDistribution dist, int n, std::uint64_t seed);

/// Plug-in sandwich covariances for the fitted model. Matrices over the
/// Z-coordinates (treatment first) of `model`.
struct CovarianceEstimates {
    std::vector<int> z_index;
    MatrixXd H;
    MatrixXd V1;
    MatrixXd J1;
    MatrixXd V2;
    MatrixXd J2;
    double J_nie = 0.0;
    double J_nde = 0.0;
};

struct IntervalReport {
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.95;
    IntervalMethod method = IntervalMethod::DeltaMethod;
};

struct EffectIntervals {
    IntervalReport nde;
    IntervalReport nie;
};

CovarianceEstimates sandwich(const ResidualizedData& res, const MediationFit& fit, const MediatorSet& model);

/// estimate +/- z_{(1+level)/2} sqrt(J / n).
EffectIntervals delta_ci(const MediationFit& fit, const CovarianceEstimates& cov, double level);

struct PerturbedEstimate {
    VectorXd alpha;
    VectorXd theta;
};

/// One perturbation-bootstrap refit with multipliers g: weighted alpha, weighted
/// pilots, rebuilt penalty weights, and the weighted penalized fit at (lambda, kappa).
/// NONE refits unpenalized, restricted to `restrict` when given.
PerturbedEstimate perturb_fit(const ResidualizedData& res, const VectorXd& g, WeightVersion version, double lambda,
                              double kappa, const std::optional<MediatorSet>& restrict = std::nullopt);

/// Same tuning and restriction as an existing fit.
PerturbedEstimate perturb_fit(const ResidualizedData& res, const VectorXd& g, const MediationFit& fit);

struct BootstrapResult {
    EffectIntervals intervals;
    std::vector<double> nde_draws;
    std::vector<double> nie_draws;
    int discarded = 0;
};

BootstrapResult bootstrap_cis(const ResidualizedData& res, const MediationFit& fit, const PerturbationScheme& scheme,
                              double level);

/// Sample quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double prob);

double normal_quantile(double prob);

}  // namespace medsel
