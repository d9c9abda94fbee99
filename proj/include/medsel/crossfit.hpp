#pragma once

#include "medsel/data.hpp"
#include "medsel/learners.hpp"
#include "medsel/stacking.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace medsel {

struct TargetEnsemble {
    std::string target;
    std::vector<EnsembleWeights> per_fold;
    bool constant = false;  // zero-variance target, predicted by its mean

    /// Weights averaged over folds (empty for constant targets).
    VectorXd mean_weights() const;
};

/// Cross-fitted nuisance predictions: row i is predicted by models that never saw
/// a row from fold_assignment[i].
struct NuisanceFit {
    VectorXd mu_y_hat;
    VectorXd mu_d_hat;
    MatrixXd mu_m_hat;
    std::vector<int> fold_assignment;  // 0-based
    int K = 0;
    double clip_eps = 0.0;
    std::vector<std::string> member_names;
    std::vector<TargetEnsemble> per_target_ensemble;  // Y, D, then each mediator
    std::vector<std::string> warnings;
};

struct CrossfitOptions {
    int K = 5;
    int inner_folds = 5;
    double clip_eps = 0.01;
    std::uint64_t seed = 0;
    int threads = 1;
};

NuisanceFit crossfit(const Dataset& data, const std::vector<LearnerSpec>& library, const CrossfitOptions& opts);

/// In-sample least-squares fits of Y, D and every M on X (linear confounding
/// control, no cross-fitting). Residualizing with these is equivalent to adding
/// X linearly to both regressions.
NuisanceFit linear_nuisance(const Dataset& data);

ResidualizedData residualize(const Dataset& data, const NuisanceFit& fit);

}  // namespace medsel
