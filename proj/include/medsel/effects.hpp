#pragma once

#include "medsel/estimator.hpp"
#include "medsel/inference.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace medsel {

struct Effects {
    double nde = 0.0;
    double nie = 0.0;
};

/// nde = gamma_hat; nie = alpha_hat . beta_hat over all p coordinates.
Effects estimate_effects(const MediationFit& fit);

struct MediatorContribution {
    int index = 0;  // 0-based
    std::string name;
    double alpha = 0.0;
    double beta = 0.0;
    double product = 0.0;
};

struct TuningSummary {
    double lambda = 0.0;
    double kappa = 0.0;
    WeightVersion version = WeightVersion::NONE;
};

struct EffectReport {
    std::vector<IntervalReport> nde;
    std::vector<IntervalReport> nie;
    MediatorSet selected;
    std::vector<MediatorContribution> per_mediator;  // sorted by |product| descending
    int model_size = 0;
    TuningSummary tuning;
    std::vector<std::string> warnings;
};

/// Point estimates always appear; each interval set adds one NDE and one NIE entry.
EffectReport build_report(const MediationFit& fit, const std::vector<EffectIntervals>& intervals,
                          const std::vector<std::string>& names);

nlohmann::json to_json(const IntervalReport& r);
nlohmann::json to_json(const EffectReport& r);
std::string render_text(const EffectReport& r);

}  // namespace medsel
