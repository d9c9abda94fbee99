#pragma once

#include "medsel/data.hpp"
#include "medsel/estimator.hpp"
#include "medsel/inference.hpp"
#include "medsel/learners.hpp"
#include "medsel/sim.hpp"
#include "medsel/study.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace medsel {

/// Everything a command needs; serializes losslessly to JSON.
struct RunConfig {
    std::string command;

    // analyze
    std::string data;
    ColumnRoles roles;
    WeightVersion weights = WeightVersion::PRD;

    // simulate
    ScenarioSpec scenario;
    std::vector<Method> methods{Method::PRD, Method::ADP, Method::FULL, Method::ORACLE, Method::LM};
    int reps = 200;

    // report
    std::vector<std::string> inputs;

    int K = 5;
    int inner_folds = 5;
    int cv_folds = 10;
    int lambda_points = 101;
    std::vector<double> lambda_grid;  // empty: n-dependent default
    std::vector<double> kappa_grid{0.5, 1.0, 2.0, 3.0};
    double clip_eps = 0.01;
    int boot_B = -1;  // -1: 1000 for analyze, 200 for simulate
    PerturbationDistribution distribution = PerturbationDistribution::Exponential;
    BootstrapInterval interval = BootstrapInterval::Basic;
    double level = 0.95;
    std::optional<std::uint64_t> seed;
    std::string output = "out";
    int threads = 1;
    std::vector<LearnerSpec> library = default_library();

    /// Fills command-dependent defaults and checks ranges.
    void resolve();
};

nlohmann::json to_json(const LearnerSpec& s);
LearnerSpec learner_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RunConfig& cfg);
/// Keys present in `j` override the corresponding fields of `base`; unknown keys are errors.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

StudyOptions to_study_options(const RunConfig& cfg);

}  // namespace medsel
