#include "medsel/error.hpp"
#include "medsel/learners.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace medsel;

TEST_CASE("default library names") {
    std::vector<std::string> names;
    for (const auto& s : default_library()) names.push_back(s.name());
    CHECK(names == std::vector<std::string>{"mean", "linear", "poly2x", "krr_s0.5", "krr_s1", "krr_s2", "knn10",
                                            "knn_sqrtn"});
}

TEST_CASE("linear and polynomial learners interpolate exact models") {
    std::mt19937_64 rng(1);
    const MatrixXd x = testing::gaussian(60, 3, rng);
    MatrixXd t(60, 2);
    t.col(0) = 1.5 + 2.0 * x.col(0).array() - x.col(2).array();
    t.col(1) = 0.5 * x.col(1).array().square() + x.col(0).array() * x.col(2).array();

    const auto lin = fit_learner(LearnerSpec::linear(), x, t.col(0).eval(), false);
    CHECK((lin.predict(x) - t.col(0)).cwiseAbs().maxCoeff() < 1e-8);

    const auto quad = fit_learner(LearnerSpec::polynomial(2, true), x, t, false);
    CHECK((quad.predict(x) - t).cwiseAbs().maxCoeff() < 1e-8);

    // joint fit equals separate fits
    const auto sep = fit_learner(LearnerSpec::polynomial(2, true), x, t.col(1).eval(), false);
    CHECK((quad.predict(x).col(1) - sep.predict(x).col(0)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("logistic fit solves the score equations") {
    std::mt19937_64 rng(2);
    const MatrixXd x = testing::gaussian(400, 2, rng);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    VectorXd d(400);
    for (int i = 0; i < 400; ++i) d[i] = u(rng) < 1.0 / (1.0 + std::exp(-(0.3 + x(i, 0) - 0.5 * x(i, 1)))) ? 1.0 : 0.0;
    const auto fit = fit_learner(LearnerSpec::linear(), x, d, true);
    const VectorXd p = fit.predict(x).col(0);
    const VectorXd r = d - p;
    CHECK(std::abs(r.sum()) < 1e-6);
    CHECK(std::abs(x.col(0).dot(r)) < 1e-6);
    CHECK(std::abs(x.col(1).dot(r)) < 1e-6);
    CHECK(p.minCoeff() > 0.0);
    CHECK(p.maxCoeff() < 1.0);

    VectorXd bad = d;
    bad[3] = 0.5;
    CHECK_THROWS_AS(fit_learner(LearnerSpec::linear(), x, bad, true), Error);
}

TEST_CASE("nearest neighbours at the extremes of k") {
    std::mt19937_64 rng(3);
    const MatrixXd x = testing::gaussian(30, 2, rng);
    const VectorXd t = testing::gaussian(30, 1, rng).col(0);
    const auto one = fit_learner(LearnerSpec::nearest_neighbors(1), x, t, false);
    CHECK((one.predict(x).col(0) - t).cwiseAbs().maxCoeff() < 1e-12);
    const auto all = fit_learner(LearnerSpec::nearest_neighbors(500), x, t, false);
    CHECK((all.predict(x).array() - t.mean()).abs().maxCoeff() < 1e-12);

    auto sq = LearnerSpec::nearest_neighbors_sqrt_n();
    CHECK(sq.name() == "knn_sqrtn");
    CHECK_NOTHROW(fit_learner(sq, x, t, false).predict(x));
}

TEST_CASE("kernel ridge tracks a smooth function and shrinks to the mean") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> z(0.0, 0.1);
    MatrixXd x(500, 1);
    VectorXd t(500), f(500);
    for (int i = 0; i < 500; ++i) {
        x(i, 0) = u(rng);
        f[i] = std::sin(6.0 * x(i, 0));
        t[i] = f[i] + z(rng);
    }
    const auto krr = fit_learner(LearnerSpec::kernel_ridge(0.5), x, t, false);
    const double rmse = std::sqrt((krr.predict(x).col(0) - f).squaredNorm() / 500);
    CHECK(rmse < 0.05);

    const auto flat = fit_learner(LearnerSpec::kernel_ridge(1.0, 1e8), x, t, false);
    CHECK((flat.predict(x).array() - t.mean()).abs().maxCoeff() < 1e-3);

    VectorXd d = (x.col(0).array() > 0.5).cast<double>();
    const auto prob = fit_learner(LearnerSpec::kernel_ridge(0.5), x, d, true).predict(x);
    CHECK(prob.minCoeff() >= 0.0);
    CHECK(prob.maxCoeff() <= 1.0);
}

TEST_CASE("constant mean and featureless fallback") {
    MatrixXd x(4, 0);
    VectorXd t(4);
    t << 1, 2, 3, 6;
    for (const auto& s : default_library()) {
        const auto f = fit_learner(s, x, t, false);
        CHECK((f.predict(x).array() - 3.0).abs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("folds are balanced, seeded and validated") {
    const auto a = make_folds(103, 5, 9);
    CHECK(a == make_folds(103, 5, 9));
    CHECK(a != make_folds(103, 5, 10));
    std::vector<int> size(5, 0);
    for (int f : a) ++size[static_cast<std::size_t>(f)];
    CHECK(*std::min_element(size.begin(), size.end()) == 20);
    CHECK(*std::max_element(size.begin(), size.end()) == 21);
    CHECK_THROWS_AS(make_folds(4, 5, 0), Error);
    CHECK_THROWS_AS(make_folds(10, 1, 0), Error);
}
