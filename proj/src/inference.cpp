#include "medsel/inference.hpp"

#include "medsel/error.hpp"
#include "medsel/rng.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace medsel {

std::string to_string(PerturbationDistribution d) {
    return d == PerturbationDistribution::Exponential ? "exponential" : "two_point";
}

PerturbationDistribution perturbation_from_string(const std::string& s) {
    if (s == "exponential" || s == "exp") return PerturbationDistribution::Exponential;
    if (s == "two_point" || s == "two-point" || s == "twopoint") return PerturbationDistribution::TwoPoint;
    throw Error("unknown perturbation distribution '" + s + "' (expected exponential or two_point)");
}

std::string to_string(BootstrapInterval b) { return b == BootstrapInterval::Basic ? "basic" : "percentile"; }

BootstrapInterval bootstrap_interval_from_string(const std::string& s) {
    if (s == "basic") return BootstrapInterval::Basic;
    if (s == "percentile") return BootstrapInterval::Percentile;
    throw Error("unknown bootstrap interval '" + s + "' (expected basic or percentile)");
}

std::string to_string(IntervalMethod m) {
    return m == IntervalMethod::DeltaMethod ? "delta" : "perturbation_bootstrap";
}

VectorXd draw_perturbation(PerturbationDistribution dist, int n, std::uint64_t seed) {
    Rng rng(seed);
    VectorXd g(n);
    if (dist == PerturbationDistribution::Exponential) {
        std::exponential_distribution<double> e(1.0);
        for (int i = 0; i < n; ++i) g[i] = e(rng);
    } else {
        std::bernoulli_distribution b(0.5);
        for (int i = 0; i < n; ++i) g[i] = b(rng) ? 2.0 : 0.0;
    }
    return g;
}

double normal_quantile(double prob) {
    if (!(prob > 0.0 && prob < 1.0)) throw Error("normal quantile needs a probability in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), prob);
}

double quantile(std::vector<double> values, double prob) {
    if (values.empty()) throw Error("quantile of an empty sample");
    if (!(prob >= 0.0 && prob <= 1.0)) throw Error("quantile probability must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

CovarianceEstimates sandwich(const ResidualizedData& res, const MediationFit& fit, const MediatorSet& model) {
    const int n = res.n();
    if (model.p() != res.p()) throw Error("model set has the wrong mediator dimension");
    if (fit.residuals_eps.size() != n || fit.residuals_eta.rows() != n) throw Error("fit residuals do not match the data");

    CovarianceEstimates out;
    out.z_index = to_z_index(model);
    const auto s1 = static_cast<Eigen::Index>(out.z_index.size());
    const MatrixXd z = res.rz();
    MatrixXd zs(n, s1);
    for (Eigen::Index c = 0; c < s1; ++c) zs.col(c) = z.col(out.z_index[static_cast<std::size_t>(c)]);

    out.H = zs.transpose() * zs / n;
    Eigen::JacobiSVD<MatrixXd> svd(out.H);
    const auto& sv = svd.singularValues();
    if (!(sv[sv.size() - 1] > 0.0) || sv[0] / sv[sv.size() - 1] > 1e12) throw Error("collinear selected mediators");
    const MatrixXd ez = fit.residuals_eps.asDiagonal() * zs;
    out.V1 = ez.transpose() * ez / n;
    const MatrixXd h_inv = out.H.inverse();
    out.J1 = h_inv * out.V1 * h_inv;
    out.J_nde = out.J1(0, 0);

    const auto s = static_cast<Eigen::Index>(model.size());
    const double s2 = res.rd.squaredNorm() / n;
    MatrixXd eta(n, s);
    VectorXd alpha(s), beta(s);
    for (Eigen::Index c = 0; c < s; ++c) {
        const int j = model.indices()[static_cast<std::size_t>(c)];
        eta.col(c) = fit.residuals_eta.col(j);
        alpha[c] = fit.alpha_hat[j];
        beta[c] = fit.theta_hat[j + 1];
    }
    const MatrixXd de = res.rd.asDiagonal() * eta;
    out.V2 = de.transpose() * de / n;
    out.J2 = out.V2 / (s2 * s2);

    VectorXd a = VectorXd::Zero(s1);
    a.tail(s) = alpha;
    out.J_nie = a.dot(out.J1 * a) + beta.dot(out.J2 * beta);
    return out;
}

EffectIntervals delta_ci(const MediationFit& fit, const CovarianceEstimates& cov, double level) {
    if (!(level > 0.0 && level < 1.0)) throw Error("confidence level must lie in (0, 1)");
    const double n = static_cast<double>(fit.residuals_eps.size());
    const double z = normal_quantile(0.5 + level / 2.0);
    auto make = [&](double est, double var) {
        const double half = z * std::sqrt(std::max(var, 0.0) / n);
        return IntervalReport{est, est - half, est + half, level, IntervalMethod::DeltaMethod};
    };
    EffectIntervals out;
    out.nde = make(fit.gamma(), cov.J_nde);
    out.nie = make(fit.alpha_hat.dot(fit.beta()), cov.J_nie);
    return out;
}

PerturbedEstimate perturb_fit(const ResidualizedData& res, const VectorXd& g, WeightVersion version, double lambda,
                              double kappa, const std::optional<MediatorSet>& restrict) {
    const int p = res.p();
    if (g.size() != res.n()) throw Error("perturbation weights must have one entry per observation");
    PerturbedEstimate out;
    out.alpha = fit_alpha(res, g);
    const auto sys = GramSystem::build(res.rz(), res.ry, g);

    std::vector<bool> free(static_cast<std::size_t>(p) + 1, true);
    if (version == WeightVersion::NONE && restrict) {
        if (restrict->p() != p) throw Error("restriction set has the wrong mediator dimension");
        for (int j = 0; j < p; ++j) free[static_cast<std::size_t>(j) + 1] = restrict->contains(j);
    }
    const auto pilot = solve_lasso(sys, VectorXd::Zero(p + 1), 0.0, free);
    if (pilot.singular) throw Error("singular perturbed design");
    if (version == WeightVersion::NONE) {
        out.theta = pilot.theta;
        return out;
    }
    const auto w = build_weights(version, out.alpha, pilot.theta.tail(p), kappa);
    out.theta = solve_lasso(sys, w.w, lambda, free).theta;
    return out;
}

PerturbedEstimate perturb_fit(const ResidualizedData& res, const VectorXd& g, const MediationFit& fit) {
    const auto version = fit.restriction ? WeightVersion::NONE : fit.weights.version;
    return perturb_fit(res, g, version, fit.lambda, fit.kappa, fit.restriction);
}

BootstrapResult bootstrap_cis(const ResidualizedData& res, const MediationFit& fit, const PerturbationScheme& scheme,
                              double level) {
    if (scheme.B < 100) throw Error("the perturbation bootstrap needs at least 100 replications");
    if (!(level > 0.0 && level < 1.0)) throw Error("confidence level must lie in (0, 1)");
    const int B = scheme.B;
    std::vector<double> nde(static_cast<std::size_t>(B)), nie(static_cast<std::size_t>(B));
    std::vector<char> ok(static_cast<std::size_t>(B), 0);

#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, scheme.threads))
    for (int b = 0; b < B; ++b) {
        try {
            const auto g = draw_perturbation(scheme.distribution, res.n(),
                                             derive_seed(scheme.seed, {stream::bootstrap, static_cast<std::uint64_t>(b)}));
            const auto est = perturb_fit(res, g, fit);
            const VectorXd beta = est.theta.tail(est.theta.size() - 1);
            nde[static_cast<std::size_t>(b)] = est.theta[0];
            nie[static_cast<std::size_t>(b)] = est.alpha.dot(beta);
            ok[static_cast<std::size_t>(b)] = std::isfinite(nde[static_cast<std::size_t>(b)]) &&
                                              std::isfinite(nie[static_cast<std::size_t>(b)]);
        } catch (const Error&) {
            ok[static_cast<std::size_t>(b)] = 0;
        }
    }

    BootstrapResult out;
    for (int b = 0; b < B; ++b) {
        if (ok[static_cast<std::size_t>(b)]) {
            out.nde_draws.push_back(nde[static_cast<std::size_t>(b)]);
            out.nie_draws.push_back(nie[static_cast<std::size_t>(b)]);
        } else {
            ++out.discarded;
        }
    }
    if (out.discarded > 0.01 * B)
        throw Error("perturbation bootstrap: " + std::to_string(out.discarded) + " of " + std::to_string(B) +
                    " replications were degenerate");

    const double lo_p = (1.0 - level) / 2.0, hi_p = 1.0 - lo_p;
    auto make = [&](double est, const std::vector<double>& draws) {
        const double qlo = quantile(draws, lo_p), qhi = quantile(draws, hi_p);
        IntervalReport r{est, qlo, qhi, level, IntervalMethod::PerturbationBootstrap};
        if (scheme.interval == BootstrapInterval::Basic) {
            r.lower = 2.0 * est - qhi;
            r.upper = 2.0 * est - qlo;
        }
        return r;
    };
    out.intervals.nde = make(fit.gamma(), out.nde_draws);
    out.intervals.nie = make(fit.alpha_hat.dot(fit.beta()), out.nie_draws);
    return out;
}

}  // namespace medsel
