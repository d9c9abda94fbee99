#include "medsel/lasso.hpp"

#include "medsel/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace medsel {

GramSystem GramSystem::build(const MatrixXd& z, const VectorXd& y) {
    GramSystem s;
    s.gram = z.transpose() * z;
    s.cross = z.transpose() * y;
    s.yy = y.squaredNorm();
    s.rows = static_cast<double>(y.size());
    return s;
}

GramSystem GramSystem::build(const MatrixXd& z, const VectorXd& y, const VectorXd& obs_weights) {
    GramSystem s;
    const MatrixXd gz = obs_weights.asDiagonal() * z;
    s.gram = z.transpose() * gz;
    s.cross = gz.transpose() * y;
    s.yy = (obs_weights.array() * y.array().square()).sum();
    s.rows = static_cast<double>(y.size());
    return s;
}

GramSystem GramSystem::operator-(const GramSystem& other) const {
    GramSystem s;
    s.gram = gram - other.gram;
    s.cross = cross - other.cross;
    s.yy = yy - other.yy;
    s.rows = rows - other.rows;
    return s;
}

double GramSystem::rss(const VectorXd& theta) const {
    return yy - 2.0 * cross.dot(theta) + theta.dot(gram * theta);
}

double lasso_objective(const GramSystem& sys, const VectorXd& weights, double lambda, const VectorXd& theta) {
    double penalty = 0.0;
    for (Eigen::Index j = 0; j < theta.size(); ++j)
        if (theta[j] != 0.0) penalty += weights[j] * std::abs(theta[j]);
    return (sys.rss(theta) + lambda * penalty) / sys.rows;
}

namespace {

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

}  // namespace

LassoSolution solve_lasso(const GramSystem& sys, const VectorXd& weights, double lambda, const std::vector<bool>& free,
                          const VectorXd* warm_start, const LassoOptions& opts) {
    const Eigen::Index d = sys.gram.rows();
    if (weights.size() != d || static_cast<Eigen::Index>(free.size()) != d)
        throw Error("lasso weights or restriction do not match the design width");
    if (!(lambda >= 0.0)) throw Error("lambda must be nonnegative");
    for (Eigen::Index j = 0; j < d; ++j)
        if (!(weights[j] >= 0.0)) throw Error("penalty weights must be nonnegative");

    LassoSolution sol;
    sol.theta = VectorXd::Zero(d);

    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < d; ++j) {
        if (!free[static_cast<std::size_t>(j)] || sys.gram(j, j) <= 0.0) continue;
        if (lambda > 0.0 && std::isinf(weights[j])) continue;
        active.push_back(j);
    }
    if (active.empty()) return sol;
    const auto a = static_cast<Eigen::Index>(active.size());

    if (lambda == 0.0) {
        MatrixXd g(a, a);
        VectorXd c(a);
        for (Eigen::Index r = 0; r < a; ++r) {
            c[r] = sys.cross[active[r]];
            for (Eigen::Index s = 0; s < a; ++s) g(r, s) = sys.gram(active[r], active[s]);
        }
        Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(g);
        cod.setThreshold(1e-12);
        const VectorXd t = cod.solve(c);
        sol.singular = cod.rank() < a;
        for (Eigen::Index r = 0; r < a; ++r) sol.theta[active[r]] = t[r];
        if (opts.record_objective) sol.objective_trace.push_back(lasso_objective(sys, weights, 0.0, sol.theta));
        return sol;
    }

    if (warm_start) {
        for (auto j : active) sol.theta[j] = (*warm_start)[j];
    }
    VectorXd scale(d);  // sqrt of the empirical second moment of each column
    for (Eigen::Index j = 0; j < d; ++j) scale[j] = std::sqrt(std::max(sys.gram(j, j), 0.0) / sys.rows);
    VectorXd g_theta = sys.gram * sol.theta;

    for (long sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (auto j : active) {
            const double gjj = sys.gram(j, j);
            const double rho = sys.cross[j] - g_theta[j] + gjj * sol.theta[j];
            const double next = soft_threshold(rho, 0.5 * lambda * weights[j]) / gjj;
            const double delta = next - sol.theta[j];
            if (delta != 0.0) {
                g_theta += delta * sys.gram.col(j);
                sol.theta[j] = next;
                max_change = std::max(max_change, std::abs(delta) * scale[j]);
            }
        }
        sol.sweeps = sweep;
        if (opts.record_objective) sol.objective_trace.push_back(lasso_objective(sys, weights, lambda, sol.theta));
        if (max_change < opts.tol) return sol;
    }
    throw Error("coordinate descent did not converge in " + std::to_string(opts.max_sweeps) +
                " sweeps (lambda=" + std::to_string(lambda) + ", active coordinates=" + std::to_string(a) + ")");
}

}  // namespace medsel
