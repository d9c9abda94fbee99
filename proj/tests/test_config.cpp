#include "medsel/config.hpp"
#include "medsel/error.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace medsel;
using nlohmann::json;

TEST_CASE("config round-trips losslessly") {
    RunConfig c;
    c.command = "simulate";
    c.seed = 18446744073709551615ULL;
    c.scenario.set_confounding("NLN");
    c.scenario.regime = CoefficientRegime::SmallAlpha;
    c.scenario.set_p(12);
    c.scenario.true_set = MediatorSet({1, 4, 7}, 12);
    c.scenario.noise_sd_eta = 0.3;
    c.methods = {Method::ORACLE, Method::PRD};
    c.kappa_grid = {0.25, 4.0};
    c.lambda_grid = {0.1, 1.0 / 3.0};
    c.level = 0.9;
    c.distribution = PerturbationDistribution::TwoPoint;
    c.interval = BootstrapInterval::Percentile;
    c.library = {LearnerSpec::kernel_ridge(0.7, 1e-4), LearnerSpec::nearest_neighbors(3)};
    c.roles = {"T", "Out", {"a", "b"}, {"x"}};
    const json j = to_json(c);
    const auto back = config_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(back.seed == c.seed);
    CHECK(back.scenario.true_set == c.scenario.true_set);
    CHECK(back.lambda_grid[1] == 1.0 / 3.0);
    CHECK(back.library[0].bandwidth_scale == 0.7);
    // through text as well
    CHECK(to_json(config_from_json(json::parse(j.dump()))) == j);
}

TEST_CASE("config overrides and validation") {
    RunConfig base;
    base.K = 7;
    const auto c = config_from_json(json{{"reps", 3}, {"library", {"linear", "knn10"}}}, base);
    CHECK(c.K == 7);
    CHECK(c.reps == 3);
    REQUIRE(c.library.size() == 2);
    CHECK(c.library[1].name() == "knn10");
    CHECK_THROWS_AS(config_from_json(json{{"repz", 3}}), Error);
    CHECK_THROWS_AS(config_from_json(json{{"scenario", {{"n", 10}, {"sigma", 1}}}}), Error);
    CHECK_THROWS_AS(config_from_json(json{{"reps", "three"}}), Error);
    CHECK_THROWS_AS(config_from_json(json{{"library", {"gbm"}}}), Error);

    RunConfig sim;
    sim.command = "simulate";
    CHECK_THROWS_AS(sim.resolve(), Error);  // seed is mandatory
    sim.seed = 1;
    sim.resolve();
    CHECK(sim.boot_B == 200);
    RunConfig an;
    an.command = "analyze";
    CHECK_THROWS_AS(an.resolve(), Error);
    an.data = "x.csv";
    an.roles = {"D", "Y", {"M"}, {}};
    an.resolve();
    CHECK(an.boot_B == 1000);
    CHECK(an.seed == 0ULL);
    an.level = 1.5;
    CHECK_THROWS_AS(an.resolve(), Error);
    RunConfig bad;
    bad.command = "plot";
    CHECK_THROWS_AS(bad.resolve(), Error);
}

TEST_CASE("config files") {
    testing::TempDir tmp("config");
    const auto p = tmp.file("c.json", R"({"K": 3, "scenario": {"confounding": "NNN", "n": 321}})");
    const auto c = load_config(p.string());
    CHECK(c.K == 3);
    CHECK(c.scenario.n == 321);
    CHECK(c.scenario.confounding() == "NNN");
    CHECK_THROWS_AS(load_config(tmp.file("bad.json", "{nope").string()), Error);
    CHECK_THROWS_AS(load_config((tmp.path() / "none.json").string()), Error);

    const auto o = to_study_options(c);
    CHECK(o.K == 3);
    CHECK(o.scenario.n == 321);
}
