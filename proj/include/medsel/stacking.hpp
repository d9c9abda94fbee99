#pragma once

#include <Eigen/Dense>

namespace medsel {

/// Convex combination weights of the library members and each member's CV risk.
struct EnsembleWeights {
    Eigen::VectorXd weights;
    Eigen::VectorXd cv_risk;
};

/// Minimizes the mean squared error of a convex combination of out-of-fold
/// member predictions (one row per member) over the probability simplex.
EnsembleWeights stack(const Eigen::MatrixXd& cv_predictions, const Eigen::VectorXd& target);

/// Mean squared error of the combination `weights` on the stacking data.
double stacking_risk(const Eigen::MatrixXd& cv_predictions, const Eigen::VectorXd& target,
                     const Eigen::VectorXd& weights);

}  // namespace medsel
