#include "medsel/stacking.hpp"

#include "medsel/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace medsel {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Minimizer of w'Qw - 2c'w over {w_F : sum w_F = 1}, zero off F (minimum-norm
// when Q_FF is singular).
VectorXd solve_on_face(const MatrixXd& q, const VectorXd& c, const std::vector<Eigen::Index>& face) {
    const auto s = static_cast<Eigen::Index>(face.size());
    MatrixXd kkt = MatrixXd::Zero(s + 1, s + 1);
    VectorXd rhs(s + 1);
    for (Eigen::Index a = 0; a < s; ++a) {
        for (Eigen::Index b = 0; b < s; ++b) kkt(a, b) = 2.0 * q(face[a], face[b]);
        kkt(a, s) = kkt(s, a) = 1.0;
        rhs[a] = 2.0 * c[face[a]];
    }
    rhs[s] = 1.0;
    const VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    VectorXd w = VectorXd::Zero(q.rows());
    for (Eigen::Index a = 0; a < s; ++a) w[face[a]] = sol[a];
    return w;
}

}  // namespace

double stacking_risk(const MatrixXd& cv_predictions, const VectorXd& target, const VectorXd& weights) {
    return (cv_predictions.transpose() * weights - target).squaredNorm() / static_cast<double>(target.size());
}

EnsembleWeights stack(const MatrixXd& cv_predictions, const VectorXd& target) {
    const Eigen::Index members = cv_predictions.rows();
    if (members < 1) throw Error("stacking needs at least one library member");
    if (cv_predictions.cols() != target.size()) throw Error("stacking predictions do not match the target length");
    const double n = static_cast<double>(target.size());

    EnsembleWeights out;
    out.cv_risk = (cv_predictions.rowwise() - target.transpose()).rowwise().squaredNorm() / n;
    Eigen::Index best = 0;
    out.cv_risk.minCoeff(&best);
    const VectorXd vertex = VectorXd::Unit(members, best);

    bool degenerate = true;
    for (Eigen::Index m = 0; m < members; ++m)
        if (cv_predictions.row(m).maxCoeff() != cv_predictions.row(m).minCoeff()) degenerate = false;
    if (members == 1 || degenerate) {
        out.weights = vertex;
        return out;
    }

    // Primal active set on the simplex, started from the best single member.
    const MatrixXd q = cv_predictions * cv_predictions.transpose() / n;
    const VectorXd c = cv_predictions * target / n;
    auto risk = [&](const VectorXd& w) { return w.dot(q * w) - 2.0 * c.dot(w); };
    const double tol = 1e-12 * (q.cwiseAbs().maxCoeff() + c.cwiseAbs().maxCoeff());

    VectorXd w = vertex;
    std::vector<Eigen::Index> face{best};
    const int max_iter = 100 + 50 * static_cast<int>(members);
    for (int iter = 0; iter < max_iter; ++iter) {
        const VectorXd grad = 2.0 * (q * w - c);
        double floor = grad[face.front()];
        for (auto j : face) floor = std::min(floor, grad[j]);
        Eigen::Index enter = -1;
        double most = -tol;
        for (Eigen::Index j = 0; j < members; ++j) {
            if (std::find(face.begin(), face.end(), j) != face.end()) continue;
            if (grad[j] - floor < most) {
                most = grad[j] - floor;
                enter = j;
            }
        }
        if (enter < 0) break;
        face.push_back(enter);

        for (int inner = 0; inner < max_iter; ++inner) {
            const VectorXd z = solve_on_face(q, c, face);
            bool interior = true;
            for (auto j : face) interior = interior && z[j] > 0.0;
            if (interior) {
                w = z;
                break;
            }
            double step = 1.0;
            for (auto j : face)
                if (z[j] <= 0.0) step = std::min(step, w[j] / (w[j] - z[j]));
            w += step * (z - w);
            std::vector<Eigen::Index> kept;
            for (auto j : face) {
                if (w[j] > 1e-15) kept.push_back(j);
                else w[j] = 0.0;
            }
            face = kept;
            if (face.empty()) {
                w = vertex;
                face = {best};
                break;
            }
        }
    }

    w = w.cwiseMax(0.0);
    w /= w.sum();

    // Members with identical predictions share their total weight evenly.
    std::vector<bool> grouped(static_cast<std::size_t>(members), false);
    for (Eigen::Index a = 0; a < members; ++a) {
        if (grouped[static_cast<std::size_t>(a)]) continue;
        std::vector<Eigen::Index> group{a};
        for (Eigen::Index b = a + 1; b < members; ++b)
            if (!grouped[static_cast<std::size_t>(b)] && cv_predictions.row(a) == cv_predictions.row(b)) group.push_back(b);
        double total = 0.0;
        for (auto j : group) {
            total += w[j];
            grouped[static_cast<std::size_t>(j)] = true;
        }
        for (auto j : group) w[j] = total / static_cast<double>(group.size());
    }

    out.weights = risk(w) <= risk(vertex) ? w : vertex;
    return out;
}

}  // namespace medsel
