#include "medsel/error.hpp"
#include "medsel/estimator.hpp"
#include "medsel/learners.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace medsel;

namespace {

// Residualized data from a linear mediation model with the given coefficients.
ResidualizedData linear_res(int n, const VectorXd& alpha, const VectorXd& beta, double gamma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto p = alpha.size();
    ResidualizedData r;
    r.rd = testing::gaussian(n, 1, rng).col(0) * 0.5;
    r.rm = r.rd * alpha.transpose() + testing::gaussian(n, static_cast<int>(p), rng);
    r.ry = gamma * r.rd + r.rm * beta + testing::gaussian(n, 1, rng).col(0);
    return r;
}

}  // namespace

TEST_CASE("fit_alpha matches per-mediator least squares through the origin") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const auto r = linear_res(30 + trial, VectorXd::LinSpaced(4, -1, 2), VectorXd::Zero(4), 0.0, 100 + trial);
        const VectorXd a = fit_alpha(r);
        for (int j = 0; j < 4; ++j) {
            const double oracle = r.rd.colPivHouseholderQr().solve(r.rm.col(j))[0];
            CHECK(a[j] == doctest::Approx(oracle).epsilon(1e-10));
        }
    }
    ResidualizedData flat{VectorXd::Ones(3), VectorXd::Zero(3), MatrixXd::Ones(3, 2)};
    CHECK_THROWS_WITH_AS(fit_alpha(flat), "no treatment variation after residualization", Error);
}

TEST_CASE("weighted fit_alpha on a two-observation fixture") {
    // rd = (1, 2), rm = (3, 1), g = (2, 1): sum g rd rm / sum g rd^2 = (6 + 2) / (2 + 4)
    ResidualizedData r{VectorXd::Zero(2), Eigen::Vector2d(1, 2), MatrixXd(2, 1)};
    r.rm << 3, 1;
    CHECK(fit_alpha(r, Eigen::Vector2d(2, 1))[0] == doctest::Approx(8.0 / 6.0).epsilon(1e-14));
    CHECK(fit_alpha(r, Eigen::Vector2d(1, 1))[0] == doctest::Approx(fit_alpha(r)[0]).epsilon(1e-14));
}

TEST_CASE("penalty weights") {
    Eigen::Vector3d a(0.5, 0.0, -2.0), b(2.0, 1.0, 0.25);
    const auto prd = build_weights(WeightVersion::PRD, a, b, 2.0);
    CHECK(prd.w.size() == 4);
    CHECK(prd.w[0] == 0.0);
    CHECK(prd.w[1] == doctest::Approx(1.0));
    CHECK(std::isinf(prd.w[2]));
    CHECK(prd.w[3] == doctest::Approx(4.0));
    const auto adp = build_weights(WeightVersion::ADP, a, b, 1.0);
    CHECK(adp.w[1] == doctest::Approx(0.5));
    CHECK(adp.w[2] == doctest::Approx(1.0));
    CHECK(adp.w[3] == doctest::Approx(4.0));
    CHECK(build_weights(WeightVersion::NONE, a, b, 0.0).w.isZero());
    CHECK_THROWS_AS(build_weights(WeightVersion::PRD, a, b, 0.0), Error);
    CHECK_THROWS_AS(build_weights(WeightVersion::PRD, a, Eigen::Vector2d(1, 1), 1.0), Error);

    CHECK(weight_version_from_string("product") == WeightVersion::PRD);
    CHECK(weight_version_from_string("ADP") == WeightVersion::ADP);
    CHECK(to_string(WeightVersion::NONE) == "NONE");
    CHECK_THROWS_AS(weight_version_from_string("ridge"), Error);
}

TEST_CASE("default tuning grids") {
    const auto g = default_lambda_grid(256);
    REQUIRE(g.size() == 101);
    CHECK(g.front() == doctest::Approx(4.0 * 0.25));
    CHECK(g.back() == doctest::Approx(4.0 * 1024.0));
    CHECK(g[50] == doctest::Approx(4.0 * 16.0));
    const auto cfg = TuningConfig::defaults(256);
    CHECK(cfg.kappa_grid == std::vector<double>{0.5, 1.0, 2.0, 3.0});
    CHECK(cfg.cv_folds == 10);
    TuningConfig bad = cfg;
    bad.kappa_grid = {0.0};
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("cross-validation error matches an explicit fold loop") {
    const auto r = linear_res(120, Eigen::Vector3d(1, 0.5, 0), Eigen::Vector3d(1, 0, 0.3), 0.5, 7);
    TuningConfig cfg;
    cfg.lambda_grid = {0.5, 5.0, 50.0};
    cfg.kappa_grid = {1.0, 2.0};
    cfg.cv_folds = 4;
    const VectorXd pa = fit_alpha(r);
    const VectorXd pb = (MatrixXd(r.rz()).colPivHouseholderQr().solve(r.ry)).tail(3);
    const auto tuned = tune(r, WeightVersion::PRD, pa, pb, cfg, 99);

    const auto folds = make_folds(120, 4, 99);
    const MatrixXd z = r.rz();
    MatrixXd oracle = MatrixXd::Zero(2, 3);
    for (int k = 0; k < 2; ++k) {
        const auto w = build_weights(WeightVersion::PRD, pa, pb, cfg.kappa_grid[static_cast<std::size_t>(k)]);
        for (int l = 0; l < 3; ++l)
            for (int f = 0; f < 4; ++f) {
                std::vector<int> tr, te;
                for (int i = 0; i < 120; ++i) (folds[static_cast<std::size_t>(i)] == f ? te : tr).push_back(i);
                MatrixXd ztr(static_cast<Eigen::Index>(tr.size()), 4);
                VectorXd ytr(static_cast<Eigen::Index>(tr.size()));
                for (std::size_t i = 0; i < tr.size(); ++i) {
                    ztr.row(static_cast<Eigen::Index>(i)) = z.row(tr[i]);
                    ytr[static_cast<Eigen::Index>(i)] = r.ry[tr[i]];
                }
                const VectorXd th = solve_lasso(GramSystem::build(ztr, ytr), w.w, cfg.lambda_grid[static_cast<std::size_t>(l)],
                                                std::vector<bool>(4, true))
                                        .theta;
                for (int i : te) oracle(k, l) += std::pow(r.ry[i] - z.row(i).dot(th), 2) / 120.0;
            }
    }
    CHECK((tuned.cv_error - oracle).cwiseAbs().maxCoeff() < 1e-7);
    Eigen::Index bk, bl;
    tuned.cv_error.minCoeff(&bk, &bl);
    CHECK(tuned.lambda == cfg.lambda_grid[static_cast<std::size_t>(bl)]);
    CHECK(tuned.kappa == cfg.kappa_grid[static_cast<std::size_t>(bk)]);
}

TEST_CASE("cross-validation ties go to the larger lambda") {
    // every lambda zeroes all penalized coefficients, so all errors are equal
    const auto r = linear_res(60, Eigen::Vector2d(0.2, 0.2), Eigen::Vector2d(0, 0), 0.0, 8);
    TuningConfig cfg;
    cfg.lambda_grid = {1e9, 1e10, 1e8};
    cfg.kappa_grid = {1.0};
    cfg.cv_folds = 3;
    const auto t = tune(r, WeightVersion::ADP, Eigen::Vector2d(0.1, 0.1), Eigen::Vector2d(0.1, 0.1), cfg, 1);
    CHECK(t.lambda == 1e10);
}

TEST_CASE("fit_mediation end to end") {
    VectorXd alpha(6), beta(6);
    alpha << 1, 1, 0, 1, 0, 0;
    beta << 1, 1, 1, 0, 0, 0;
    const auto r = linear_res(1500, alpha, beta, 1.0, 9);
    const auto cfg = TuningConfig::defaults(1500, 41);

    const auto prd = fit_mediation(r, WeightVersion::PRD, cfg, 5);
    CHECK(prd.selected.includes(MediatorSet({0, 1}, 6)));
    CHECK(prd.lambda > 0.0);
    for (int j = 0; j < 6; ++j) CHECK((prd.theta_hat[j + 1] != 0.0) == prd.selected.contains(j));
    CHECK((prd.residuals_eps - outcome_residuals(r, prd.theta_hat)).norm() == 0.0);
    CHECK((prd.residuals_eta - mediator_residuals(r, prd.alpha_hat)).norm() == 0.0);

    const auto full = fit_mediation(r, WeightVersion::NONE, cfg, 5);
    const VectorXd ols = r.rz().colPivHouseholderQr().solve(r.ry);
    CHECK((full.theta_hat - ols).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(full.selected == MediatorSet::full(6));

    const auto oracle = fit_fixed_model(r, MediatorSet({0, 1, 2}, 6));
    CHECK(oracle.theta_hat.tail(3).isZero());
    const VectorXd sub = r.rz().leftCols(4).colPivHouseholderQr().solve(r.ry);
    CHECK((oracle.theta_hat.head(4) - sub).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(oracle.restriction.has_value());

    const auto wide = linear_res(5, VectorXd::Ones(6), VectorXd::Ones(6), 1.0, 3);
    CHECK_THROWS_AS(fit_mediation(wide, WeightVersion::PRD, TuningConfig::defaults(5), 1), Error);
}
