#include "medsel/sim.hpp"

#include "medsel/error.hpp"
#include "medsel/rng.hpp"

#include <cmath>
#include <random>

namespace medsel {

std::string to_string(CoefficientRegime r) {
    switch (r) {
        case CoefficientRegime::Large: return "Large";
        case CoefficientRegime::Small: return "Small";
        case CoefficientRegime::SmallAlpha: return "SmallAlpha";
    }
    return "?";
}

CoefficientRegime regime_from_string(const std::string& s) {
    if (s == "Large" || s == "large") return CoefficientRegime::Large;
    if (s == "Small" || s == "small") return CoefficientRegime::Small;
    if (s == "SmallAlpha" || s == "small_alpha" || s == "smallalpha") return CoefficientRegime::SmallAlpha;
    throw Error("unknown coefficient regime '" + s + "' (expected Large, Small or SmallAlpha)");
}

std::string ScenarioSpec::confounding() const {
    std::string s;
    for (bool b : nonlinear) s += b ? 'N' : 'L';
    return s;
}

void ScenarioSpec::set_confounding(const std::string& code) {
    if (code.size() != 3) throw Error("confounding code must have three letters from {L, N}, got '" + code + "'");
    for (std::size_t i = 0; i < 3; ++i) {
        if (code[i] != 'L' && code[i] != 'N')
            throw Error("confounding code must have three letters from {L, N}, got '" + code + "'");
        nonlinear[i] = code[i] == 'N';
    }
}

void ScenarioSpec::set_p(int new_p) {
    if (new_p < 1) throw Error("p must be positive");
    std::vector<int> kept;
    for (int j : true_set.indices())
        if (j < new_p) kept.push_back(j);
    p = new_p;
    true_set = MediatorSet(kept, new_p);
}

void ScenarioSpec::validate() const {
    if (n < 2) throw Error("scenario n must be at least 2");
    if (q < 3) throw Error("scenario q must be at least 3");
    if (true_set.p() != p) throw Error("true set dimension does not match p");
    if (true_set.size() > p - 2) throw Error("true set leaves no room for the two decoy mediators");
    if (!(noise_sd_eps > 0.0) || !(noise_sd_eta > 0.0)) throw Error("noise scales must be positive");
}

LocalCoefficientSchedule LocalCoefficientSchedule::build(const ScenarioSpec& spec) {
    spec.validate();
    const double n = spec.n;
    LocalCoefficientSchedule s;
    s.alpha = VectorXd::Zero(spec.p);
    s.beta = VectorXd::Zero(spec.p);
    s.rates = MatrixXd::Zero(spec.p, 2);
    s.gamma = 1.0;

    // Small: each true coordinate contributes 4 n^{-1/2}, split as
    // (4n^{-1/2}, 1), (2n^{-1/4}, 2n^{-1/4}), (4, n^{-1/2}) cyclically.
    const double a_small[3] = {4.0 * std::pow(n, -0.5), 2.0 * std::pow(n, -0.25), 4.0};
    const double b_small[3] = {1.0, 2.0 * std::pow(n, -0.25), std::pow(n, -0.5)};
    const double c_a[3] = {0.5, 0.25, 0.0};
    const double c_b[3] = {0.0, 0.25, 0.5};
    int k = 0;
    for (int j : spec.true_set.indices()) {
        const int t = k++ % 3;
        switch (spec.regime) {
            case CoefficientRegime::Large:
                s.alpha[j] = 1.0;
                s.beta[j] = 1.0;
                break;
            case CoefficientRegime::Small:
                s.alpha[j] = a_small[t];
                s.beta[j] = b_small[t];
                s.rates(j, 0) = c_a[t];
                s.rates(j, 1) = c_b[t];
                break;
            case CoefficientRegime::SmallAlpha:
                s.alpha[j] = b_small[t];
                s.beta[j] = a_small[t];
                s.rates(j, 0) = c_b[t];
                s.rates(j, 1) = c_a[t];
                break;
        }
    }
    const auto decoys = spec.true_set.complement().indices();
    s.beta[decoys[0]] = spec.outcome_decoy_beta;
    s.alpha[decoys[1]] = 1.0;
    return s;
}

double propensity(const ScenarioSpec& spec, double x1, double x2) {
    const double lin = spec.nonlinear[0] ? 0.8 * (x1 * x2 + x2) : 0.8 * (x1 + x2);
    return 1.0 / (1.0 + std::exp(-lin));
}

double psi_m(const ScenarioSpec& spec, double x1, double x2, double x3) {
    return (spec.nonlinear[1] ? x1 * x1 : x1) + x2 - x3;
}

double psi_y(const ScenarioSpec& spec, double x1, double x2, double x3) {
    const double c = x1 - 0.5;
    return 2.0 * (spec.nonlinear[2] ? c * c : c) + x2 + 2.0 * x3;
}

SimulatedData generate(const ScenarioSpec& spec, std::uint64_t seed) {
    spec.validate();
    const int n = spec.n, p = spec.p, q = spec.q;
    const auto coef = LocalCoefficientSchedule::build(spec);

    Rng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> norm(0.0, 1.0);

    MatrixXd x(n, q);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < q; ++c) x(i, c) = unif(rng);

    VectorXd d(n), mu_d(n), pm(n), py(n);
    for (int i = 0; i < n; ++i) {
        mu_d[i] = propensity(spec, x(i, 0), x(i, 1));
        d[i] = unif(rng) < mu_d[i] ? 1.0 : 0.0;
        pm[i] = psi_m(spec, x(i, 0), x(i, 1), x(i, 2));
        py[i] = psi_y(spec, x(i, 0), x(i, 1), x(i, 2));
    }

    MatrixXd m(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) m(i, j) = coef.alpha[j] * d[i] + pm[i] + spec.noise_sd_eta * norm(rng);

    VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = coef.gamma * d[i] + m.row(i).dot(coef.beta) + py[i] + spec.noise_sd_eps * norm(rng);

    GroundTruth truth;
    truth.coef = coef;
    truth.true_set = spec.true_set;
    truth.nde = coef.gamma;
    truth.nie = coef.alpha.dot(coef.beta);
    double restricted = 0.0;
    for (int j : spec.true_set.indices()) restricted += coef.alpha[j] * coef.beta[j];
    if (std::abs(restricted - truth.nie) > 1e-12 * (1.0 + std::abs(restricted))) throw Error("internal: true NIE differs between the true set and the full vector");

    truth.mu_d = mu_d;
    truth.mu_m = mu_d * coef.alpha.transpose() + pm * Eigen::RowVectorXd::Ones(p);
    truth.mu_y = coef.gamma * mu_d + truth.mu_m * coef.beta + py;

    return {Dataset(std::move(d), std::move(x), std::move(m), std::move(y)), std::move(truth)};
}

NuisanceDiagnostics nuisance_diagnostics(const NuisanceFit& fit, const GroundTruth& truth) {
    const auto n = truth.mu_y.size();
    const auto p = truth.mu_m.cols();
    if (fit.mu_y_hat.size() != n || fit.mu_m_hat.cols() != p) throw Error("nuisance fit does not match the ground truth");
    const int K = fit.K;
    if (K < 1 || fit.fold_assignment.size() != static_cast<std::size_t>(n)) throw Error("nuisance fit has no fold assignment");
    NuisanceDiagnostics out;
    out.targets = {"Y", "D"};
    for (Eigen::Index j = 0; j < p; ++j) out.targets.push_back("M" + std::to_string(j + 1));

    const auto T = static_cast<Eigen::Index>(out.targets.size());
    MatrixXd sq = MatrixXd::Zero(T, K);
    VectorXd count = VectorXd::Zero(K);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int f = fit.fold_assignment[static_cast<std::size_t>(i)];
        count[f] += 1.0;
        sq(0, f) += std::pow(fit.mu_y_hat[i] - truth.mu_y[i], 2);
        sq(1, f) += std::pow(fit.mu_d_hat[i] - truth.mu_d[i], 2);
        for (Eigen::Index j = 0; j < p; ++j) sq(2 + j, f) += std::pow(fit.mu_m_hat(i, j) - truth.mu_m(i, j), 2);
    }
    out.overall = (sq.rowwise().sum() / static_cast<double>(n)).cwiseSqrt();
    out.per_fold = MatrixXd::Zero(T, K);
    for (int f = 0; f < K; ++f)
        if (count[f] > 0) out.per_fold.col(f) = (sq.col(f) / count[f]).cwiseSqrt();
    return out;
}

}  // namespace medsel
