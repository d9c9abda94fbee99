#pragma once

#include <Eigen/Dense>

#include <vector>

namespace medsel {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Sufficient statistics of a least-squares problem, optionally with
/// observation weights g: Z'GZ, Z'Gy, y'Gy and the row count.
struct GramSystem {
    MatrixXd gram;
    VectorXd cross;
    double yy = 0.0;
    double rows = 0.0;

    static GramSystem build(const MatrixXd& z, const VectorXd& y);
    static GramSystem build(const MatrixXd& z, const VectorXd& y, const VectorXd& obs_weights);

    GramSystem operator-(const GramSystem& other) const;
    /// Residual sum of squares at theta.
    double rss(const VectorXd& theta) const;
};

struct LassoOptions {
    double tol = 1e-8;  // max coordinate change, unit-second-moment scale
    long max_sweeps = 100000;
    bool record_objective = false;
};

struct LassoSolution {
    VectorXd theta;
    long sweeps = 0;
    bool singular = false;  // only set for lambda = 0
    std::vector<double> objective_trace;
};

/// (1/n) RSS(theta) + (lambda/n) sum_j w_j |theta_j|, with 0 * inf = 0.
double lasso_objective(const GramSystem& sys, const VectorXd& weights, double lambda, const VectorXd& theta);

/// Minimizes lasso_objective over theta with theta_j = 0 wherever `free[j]` is
/// false. Cyclic coordinate descent with covariance updates for lambda > 0;
/// minimum-norm least squares for lambda = 0. Coefficients with infinite
/// weight are exactly zero when lambda > 0.
LassoSolution solve_lasso(const GramSystem& sys, const VectorXd& weights, double lambda, const std::vector<bool>& free,
                          const VectorXd* warm_start = nullptr, const LassoOptions& opts = {});

}  // namespace medsel
