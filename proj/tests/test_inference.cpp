#include "medsel/error.hpp"
#include "medsel/inference.hpp"
#include "medsel/sim.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace medsel;

namespace {

ResidualizedData linear_res(int n, const VectorXd& alpha, const VectorXd& beta, double gamma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ResidualizedData r;
    r.rd = testing::gaussian(n, 1, rng).col(0) * 0.5;
    r.rm = r.rd * alpha.transpose() + testing::gaussian(n, static_cast<int>(alpha.size()), rng);
    r.ry = gamma * r.rd + r.rm * beta + testing::gaussian(n, 1, rng).col(0);
    return r;
}

// Residuals from the true nuisance functions of a simulated data set.
ResidualizedData oracle_res(const SimulatedData& s) {
    return residualize(s.data, s.truth.mu_y, s.truth.mu_d, s.truth.mu_m);
}

MediationFit manual_fit(const ResidualizedData& r, const VectorXd& theta, const VectorXd& alpha, const VectorXd& eps) {
    MediationFit f;
    f.theta_hat = theta;
    f.alpha_hat = alpha;
    f.selected = MediatorSet::full(static_cast<int>(alpha.size()));
    f.residuals_eps = eps;
    f.residuals_eta = mediator_residuals(r, alpha);
    return f;
}

}  // namespace

TEST_CASE("sandwich on hand-checkable fixtures") {
    // columns of Z are orthonormal in the (1/n) inner product
    ResidualizedData r{VectorXd::Zero(4), Eigen::Vector4d(1, -1, 1, -1), MatrixXd(4, 1)};
    r.rm << 1, 1, -1, -1;
    const double sigma = 1.7;
    const auto f = manual_fit(r, Eigen::Vector2d(0.3, 2.0), VectorXd::Constant(1, 0.5),
                              Eigen::Vector4d(sigma, -sigma, -sigma, sigma));
    const auto cov = sandwich(r, f, MediatorSet::full(1));
    CHECK(cov.H.isApprox(MatrixXd::Identity(2, 2)));
    CHECK((cov.J1 - sigma * sigma * MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(cov.J_nde == doctest::Approx(sigma * sigma));

    const auto zero = sandwich(r, manual_fit(r, Eigen::Vector2d(0.3, 2.0), VectorXd::Constant(1, 0.5), VectorXd::Zero(4)),
                               MediatorSet::full(1));
    CHECK(zero.J1.isZero());
}

TEST_CASE("J2 and the NIE variance agree with per-coordinate formulas") {
    const auto r = linear_res(300, Eigen::Vector3d(1, -0.5, 2), Eigen::Vector3d(0.5, 1, -1), 1.0, 4);
    const VectorXd alpha = r.rm.transpose() * r.rd / r.rd.squaredNorm();
    const VectorXd theta = r.rz().colPivHouseholderQr().solve(r.ry);
    const auto f = manual_fit(r, theta, alpha, r.ry - r.rz() * theta);
    const auto cov = sandwich(r, f, MediatorSet::full(3));
    const double n = 300, s2 = r.rd.squaredNorm() / n;
    for (int j = 0; j < 3; ++j) {
        const VectorXd eta = r.rm.col(j) - alpha[j] * r.rd;
        const double univariate = (r.rd.array().square() * eta.array().square()).sum() / n / (s2 * s2);
        CHECK(cov.J2(j, j) == doctest::Approx(univariate).epsilon(1e-12));
    }
    VectorXd a = VectorXd::Zero(4);
    a.tail(3) = alpha;
    const double direct = a.dot(cov.J1 * a) + theta.tail(3).dot(cov.J2 * theta.tail(3));
    CHECK(cov.J_nie == doctest::Approx(direct).epsilon(1e-12));
    CHECK(cov.J_nie >= 0.0);
    CHECK(cov.J1.isApprox(cov.J1.transpose()));
    CHECK(Eigen::SelfAdjointEigenSolver<MatrixXd>(cov.J1).eigenvalues().minCoeff() > -1e-12);

    // the empty model keeps the D-only NDE variance and has no NIE variance
    const auto empty = sandwich(r, f, MediatorSet({}, 3));
    CHECK(empty.J_nie == 0.0);
    CHECK(empty.J1.rows() == 1);
    const double hd = s2;
    const double v = (r.rd.array().square() * f.residuals_eps.array().square()).sum() / n;
    CHECK(empty.J_nde == doctest::Approx(v / (hd * hd)).epsilon(1e-12));
}

TEST_CASE("collinear selected mediators") {
    auto r = linear_res(50, Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 1), 1.0, 5);
    r.rm.col(1) = r.rm.col(0);
    const auto f = manual_fit(r, Eigen::Vector3d(1, 1, 1), Eigen::Vector2d(1, 1), VectorXd::Ones(50));
    CHECK_THROWS_WITH_AS(sandwich(r, f, MediatorSet::full(2)), "collinear selected mediators", Error);
}

TEST_CASE("sandwich J1 matches the Monte Carlo covariance of the submodel estimator") {
    ScenarioSpec spec;
    spec.n = 2000;
    const int reps = 500;
    const auto model = spec.true_set;
    MatrixXd draws(reps, 4);
    MatrixXd j1_mean = MatrixXd::Zero(4, 4);
    for (int b = 0; b < reps; ++b) {
        const auto sim = generate(spec, 1000 + static_cast<std::uint64_t>(b));
        const auto r = oracle_res(sim);
        const auto fit = fit_fixed_model(r, model);
        VectorXd theta0(4);
        theta0 << sim.truth.coef.gamma, sim.truth.coef.beta.head(3);
        VectorXd th(4);
        th << fit.theta_hat[0], fit.theta_hat.segment(1, 3);
        draws.row(b) = (std::sqrt(2000.0) * (th - theta0)).transpose();
        j1_mean += sandwich(r, fit, model).J1 / reps;
    }
    const MatrixXd centered = draws.rowwise() - draws.colwise().mean();
    const MatrixXd mc = centered.transpose() * centered / (reps - 1);
    const double rel = (j1_mean - mc).norm() / mc.norm();
    MESSAGE("relative Frobenius gap " << rel);
    CHECK(rel < 0.15);
}

TEST_CASE("delta-method intervals") {
    MediationFit f;
    f.theta_hat = Eigen::Vector2d(1.5, 2.0);
    f.alpha_hat = VectorXd::Constant(1, 0.5);
    f.residuals_eps = VectorXd::Zero(400);
    CovarianceEstimates cov;
    cov.J_nde = 4.0;
    cov.J_nie = 0.0;
    const auto ci = delta_ci(f, cov, 0.95);
    const double z = normal_quantile(0.975);
    CHECK(z == doctest::Approx(1.959963984540054).epsilon(1e-14));
    CHECK(ci.nde.lower == doctest::Approx(1.5 - z * 0.1));
    CHECK(ci.nde.upper == doctest::Approx(1.5 + z * 0.1));
    CHECK(ci.nie.lower == 1.0);
    CHECK(ci.nie.upper == 1.0);
    CHECK(ci.nde.method == IntervalMethod::DeltaMethod);
    const auto wide = delta_ci(f, cov, 0.99);
    CHECK(wide.nde.lower < ci.nde.lower);
    CHECK(wide.nde.upper > ci.nde.upper);
    CHECK_THROWS_AS(delta_ci(f, cov, 1.0), Error);
}

TEST_CASE("delta-method width shrinks like 1/sqrt(n)") {
    ScenarioSpec spec;
    double width[2] = {0.0, 0.0};
    const int sizes[2] = {500, 2000};
    for (int k = 0; k < 2; ++k) {
        spec.n = sizes[k];
        for (int s = 0; s < 20; ++s) {
            const auto sim = generate(spec, 50 + static_cast<std::uint64_t>(s));
            const auto r = oracle_res(sim);
            const auto fit = fit_fixed_model(r, spec.true_set);
            const auto ci = delta_ci(fit, sandwich(r, fit, spec.true_set), 0.95);
            width[k] += (ci.nie.upper - ci.nie.lower) / 20.0;
        }
    }
    CHECK(width[1] / width[0] == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("perturbation draws have mean one and unit variance") {
    for (auto dist : {PerturbationDistribution::Exponential, PerturbationDistribution::TwoPoint}) {
        const VectorXd g = draw_perturbation(dist, 200000, 3);
        const double mean = g.mean();
        const double var = (g.array() - mean).square().sum() / (g.size() - 1);
        CHECK(mean == doctest::Approx(1.0).epsilon(0.01));
        CHECK(var == doctest::Approx(1.0).epsilon(0.02));
        CHECK(g.minCoeff() >= 0.0);
        CHECK(g == draw_perturbation(dist, 200000, 3));
    }
    const VectorXd tp = draw_perturbation(PerturbationDistribution::TwoPoint, 100, 4);
    CHECK(((tp.array() == 0.0) || (tp.array() == 2.0)).all());
}

TEST_CASE("unit multipliers reproduce the original fit") {
    VectorXd alpha(5), beta(5);
    alpha << 1, 0.5, 0, 1, 0;
    beta << 1, 1, 1, 0, 0;
    const auto r = linear_res(600, alpha, beta, 1.0, 6);
    const auto cfg = TuningConfig::defaults(600, 21);
    for (auto v : {WeightVersion::PRD, WeightVersion::ADP, WeightVersion::NONE}) {
        const auto fit = fit_mediation(r, v, cfg, 2);
        const auto same = perturb_fit(r, VectorXd::Ones(600), fit);
        CHECK((same.alpha - fit.alpha_hat).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((same.theta - fit.theta_hat).cwiseAbs().maxCoeff() < 1e-10);
    }
    const auto oracle = fit_fixed_model(r, MediatorSet({0, 1, 2}, 5));
    const auto same = perturb_fit(r, VectorXd::Ones(600), oracle);
    CHECK((same.theta - oracle.theta_hat).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(same.theta.tail(2).isZero());
}

TEST_CASE("different multipliers give different refits") {
    const auto r = linear_res(300, Eigen::Vector3d(1, 1, 0), Eigen::Vector3d(1, 0.5, 0), 1.0, 7);
    const auto fit = fit_mediation(r, WeightVersion::PRD, TuningConfig::defaults(300, 21), 3);
    const auto a = perturb_fit(r, draw_perturbation(PerturbationDistribution::Exponential, 300, 1), fit);
    const auto b = perturb_fit(r, draw_perturbation(PerturbationDistribution::Exponential, 300, 2), fit);
    CHECK((a.theta - b.theta).norm() > 0.0);
    CHECK((a.alpha - b.alpha).norm() > 0.0);
}

TEST_CASE("rescaling the outcome rescales the refit") {
    const auto r = linear_res(400, Eigen::Vector3d(1, 1, 0), Eigen::Vector3d(1, 0.5, 0.1), 1.0, 8);
    const VectorXd g = draw_perturbation(PerturbationDistribution::Exponential, 400, 5);
    const double c = 3.0, kappa = 2.0, lambda = 7.0;
    ResidualizedData rc = r;
    rc.ry *= c;
    // penalized: the penalty scale moves with c^(1 + kappa) because the weights carry |beta|^(-kappa)
    const auto a = perturb_fit(r, g, WeightVersion::PRD, lambda, kappa);
    const auto b = perturb_fit(rc, g, WeightVersion::PRD, lambda * std::pow(c, 1.0 + kappa), kappa);
    CHECK((b.theta - c * a.theta).cwiseAbs().maxCoeff() < 1e-7);

    // fixed model: bootstrap intervals scale exactly
    const MediatorSet model({0, 1}, 3);
    const auto f1 = fit_fixed_model(r, model);
    const auto f2 = fit_fixed_model(rc, model);
    PerturbationScheme scheme;
    scheme.B = 150;
    scheme.seed = 9;
    const auto b1 = bootstrap_cis(r, f1, scheme, 0.9);
    const auto b2 = bootstrap_cis(rc, f2, scheme, 0.9);
    CHECK(b2.intervals.nie.lower == doctest::Approx(c * b1.intervals.nie.lower).epsilon(1e-10));
    CHECK(b2.intervals.nie.upper == doctest::Approx(c * b1.intervals.nie.upper).epsilon(1e-10));
    CHECK(b2.intervals.nde.estimate == doctest::Approx(c * b1.intervals.nde.estimate).epsilon(1e-10));
}

TEST_CASE("bootstrap intervals: degenerate spread, reflection and determinism") {
    // noiseless outcome and the empty model: every weighting returns the same estimates
    std::mt19937_64 rng(10);
    ResidualizedData r;
    r.rd = testing::gaussian(100, 1, rng).col(0);
    r.rm = testing::gaussian(100, 2, rng);
    r.ry = 0.5 * r.rd;
    const auto fit = fit_fixed_model(r, MediatorSet({}, 2));
    PerturbationScheme scheme;
    scheme.B = 100;
    const auto flat = bootstrap_cis(r, fit, scheme, 0.95);
    CHECK(flat.intervals.nde.lower == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(flat.intervals.nde.upper == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(flat.intervals.nie.lower == 0.0);
    CHECK(flat.intervals.nie.upper == 0.0);

    const auto noisy = linear_res(300, Eigen::Vector3d(1, 1, 0), Eigen::Vector3d(1, 0.5, 0), 1.0, 11);
    const auto pf = fit_mediation(noisy, WeightVersion::PRD, TuningConfig::defaults(300, 21), 4);
    scheme.B = 200;
    scheme.seed = 12;
    const auto basic = bootstrap_cis(noisy, pf, scheme, 0.95);
    scheme.interval = BootstrapInterval::Percentile;
    scheme.threads = 3;
    const auto pct = bootstrap_cis(noisy, pf, scheme, 0.95);
    REQUIRE(basic.nie_draws.size() == 200);
    CHECK(basic.nie_draws == pct.nie_draws);
    const double est = basic.intervals.nie.estimate;
    CHECK(basic.intervals.nie.lower == doctest::Approx(2 * est - quantile(basic.nie_draws, 0.975)).epsilon(1e-12));
    CHECK(basic.intervals.nie.upper == doctest::Approx(2 * est - quantile(basic.nie_draws, 0.025)).epsilon(1e-12));
    CHECK(pct.intervals.nie.lower == doctest::Approx(quantile(basic.nie_draws, 0.025)).epsilon(1e-12));
    CHECK(basic.intervals.nie.lower <= basic.intervals.nie.upper);
    CHECK(basic.intervals.nie.method == IntervalMethod::PerturbationBootstrap);

    scheme.B = 99;
    CHECK_THROWS_AS(bootstrap_cis(noisy, pf, scheme, 0.95), Error);
}

TEST_CASE("sample quantiles interpolate between order statistics") {
    const std::vector<double> v{4, 1, 3, 2};
    CHECK(quantile(v, 0.0) == 1.0);
    CHECK(quantile(v, 1.0) == 4.0);
    CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
    CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
    CHECK_THROWS_AS(quantile({}, 0.5), Error);
}
