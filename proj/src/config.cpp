#include "medsel/config.hpp"

#include "medsel/error.hpp"

#include <fstream>
#include <set>

namespace medsel {

using nlohmann::json;

namespace {

template <typename T>
void take(const json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).get<T>();
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw Error(where + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw Error("unknown key '" + it.key() + "' in " + where);
}

json scenario_json(const ScenarioSpec& s) {
    json ts = json::array();
    for (int j : s.true_set.indices()) ts.push_back(j + 1);
    return {{"confounding", s.confounding()}, {"regime", to_string(s.regime)}, {"n", s.n},      {"p", s.p},
            {"q", s.q},                       {"true_set", ts},                 {"noise_sd_eps", s.noise_sd_eps},
            {"noise_sd_eta", s.noise_sd_eta}, {"outcome_decoy_beta", s.outcome_decoy_beta}};
}

ScenarioSpec scenario_from_json(const json& j, ScenarioSpec s) {
    check_keys(j, {"confounding", "regime", "n", "p", "q", "true_set", "noise_sd_eps", "noise_sd_eta", "outcome_decoy_beta"},
               "scenario");
    if (j.contains("confounding")) s.set_confounding(j.at("confounding").get<std::string>());
    if (j.contains("regime")) s.regime = regime_from_string(j.at("regime").get<std::string>());
    take(j, "n", s.n);
    if (j.contains("p")) s.set_p(j.at("p").get<int>());
    take(j, "q", s.q);
    if (j.contains("true_set")) {
        std::vector<int> idx;
        for (int v : j.at("true_set").get<std::vector<int>>()) idx.push_back(v - 1);
        s.true_set = MediatorSet(idx, s.p);
    }
    take(j, "noise_sd_eps", s.noise_sd_eps);
    take(j, "noise_sd_eta", s.noise_sd_eta);
    take(j, "outcome_decoy_beta", s.outcome_decoy_beta);
    return s;
}

}  // namespace

json to_json(const LearnerSpec& s) {
    return {{"kind", to_string(s.kind)},   {"degree", s.degree},       {"interactions", s.interactions},
            {"bandwidth", s.bandwidth},    {"bandwidth_scale", s.bandwidth_scale}, {"ridge", s.ridge},
            {"landmarks", s.landmarks},    {"k", s.k},                 {"k_sqrt_n", s.k_sqrt_n}};
}

LearnerSpec learner_from_json(const json& j) {
    if (j.is_string()) {
        for (const auto& s : default_library())
            if (s.name() == j.get<std::string>()) return s;
        throw Error("unknown learner name '" + j.get<std::string>() + "'");
    }
    check_keys(j, {"kind", "degree", "interactions", "bandwidth", "bandwidth_scale", "ridge", "landmarks", "k", "k_sqrt_n"},
               "learner");
    LearnerSpec s;
    s.kind = learner_kind_from_string(j.at("kind").get<std::string>());
    take(j, "degree", s.degree);
    take(j, "interactions", s.interactions);
    take(j, "bandwidth", s.bandwidth);
    take(j, "bandwidth_scale", s.bandwidth_scale);
    take(j, "ridge", s.ridge);
    take(j, "landmarks", s.landmarks);
    take(j, "k", s.k);
    take(j, "k_sqrt_n", s.k_sqrt_n);
    s.validate();
    return s;
}

void RunConfig::resolve() {
    if (command != "analyze" && command != "simulate" && command != "report" && command != "generate")
        throw Error("command must be analyze, simulate, report or generate");
    if (boot_B < 0) boot_B = command == "analyze" ? 1000 : 200;
    if (command == "generate") scenario.validate();
    if (command == "simulate") {
        if (!seed) throw Error("simulate requires a seed");
        if (reps < 1) throw Error("reps must be at least 1");
        if (methods.empty()) throw Error("no methods requested");
        scenario.validate();
    }
    if (!seed) seed = 0;
    if (command == "analyze") {
        if (data.empty()) throw Error("analyze requires a data file");
        if (roles.treatment.empty() || roles.outcome.empty() || roles.mediators.empty())
            throw Error("analyze requires treatment, outcome and at least one mediator column");
    }
    if (command == "report" && inputs.empty()) throw Error("report requires at least one input directory");
    if (K < 2 || inner_folds < 2 || cv_folds < 2) throw Error("fold counts must be at least 2");
    if (lambda_points < 1) throw Error("lambda_points must be positive");
    if (!(clip_eps >= 0.0 && clip_eps < 0.5)) throw Error("clip_eps must lie in [0, 0.5)");
    if (boot_B != 0 && boot_B < 100) throw Error("boot_B must be 0 (disabled) or at least 100");
    if (!(level > 0.0 && level < 1.0)) throw Error("level must lie in (0, 1)");
    if (threads < 1) throw Error("threads must be at least 1");
    if (library.empty()) throw Error("the learner library is empty");
    for (const auto& l : library) l.validate();
    TuningConfig t{lambda_grid.empty() ? std::vector<double>{1.0} : lambda_grid, kappa_grid, cv_folds};
    t.validate();
}

json to_json(const RunConfig& c) {
    json methods = json::array();
    for (auto m : c.methods) methods.push_back(to_string(m));
    json library = json::array();
    for (const auto& l : c.library) library.push_back(to_json(l));
    return {{"command", c.command},
            {"data", c.data},
            {"roles",
             {{"treatment", c.roles.treatment},
              {"outcome", c.roles.outcome},
              {"mediators", c.roles.mediators},
              {"confounders", c.roles.confounders}}},
            {"weights", to_string(c.weights)},
            {"scenario", scenario_json(c.scenario)},
            {"methods", methods},
            {"reps", c.reps},
            {"inputs", c.inputs},
            {"K", c.K},
            {"inner_folds", c.inner_folds},
            {"cv_folds", c.cv_folds},
            {"lambda_points", c.lambda_points},
            {"lambda_grid", c.lambda_grid},
            {"kappa_grid", c.kappa_grid},
            {"clip_eps", c.clip_eps},
            {"boot_B", c.boot_B},
            {"distribution", to_string(c.distribution)},
            {"interval", to_string(c.interval)},
            {"level", c.level},
            {"seed", c.seed ? json(*c.seed) : json(nullptr)},
            {"output", c.output},
            {"threads", c.threads},
            {"library", library}};
}

RunConfig config_from_json(const json& j, RunConfig c) {
    check_keys(j,
               {"command", "data", "roles", "weights", "scenario", "methods", "reps", "inputs", "K", "inner_folds",
                "cv_folds", "lambda_points", "lambda_grid", "kappa_grid", "clip_eps", "boot_B", "distribution",
                "interval", "level", "seed", "output", "threads", "library"},
               "config");
    try {
        take(j, "command", c.command);
        take(j, "data", c.data);
        if (j.contains("roles")) {
            const auto& r = j.at("roles");
            check_keys(r, {"treatment", "outcome", "mediators", "confounders"}, "roles");
            take(r, "treatment", c.roles.treatment);
            take(r, "outcome", c.roles.outcome);
            take(r, "mediators", c.roles.mediators);
            take(r, "confounders", c.roles.confounders);
        }
        if (j.contains("weights")) c.weights = weight_version_from_string(j.at("weights").get<std::string>());
        if (j.contains("scenario")) c.scenario = scenario_from_json(j.at("scenario"), c.scenario);
        if (j.contains("methods")) {
            c.methods.clear();
            for (const auto& m : j.at("methods")) c.methods.push_back(method_from_string(m.get<std::string>()));
        }
        take(j, "reps", c.reps);
        take(j, "inputs", c.inputs);
        take(j, "K", c.K);
        take(j, "inner_folds", c.inner_folds);
        take(j, "cv_folds", c.cv_folds);
        take(j, "lambda_points", c.lambda_points);
        take(j, "lambda_grid", c.lambda_grid);
        take(j, "kappa_grid", c.kappa_grid);
        take(j, "clip_eps", c.clip_eps);
        take(j, "boot_B", c.boot_B);
        if (j.contains("distribution"))
            c.distribution = perturbation_from_string(j.at("distribution").get<std::string>());
        if (j.contains("interval")) c.interval = bootstrap_interval_from_string(j.at("interval").get<std::string>());
        take(j, "level", c.level);
        if (j.contains("seed")) {
            if (j.at("seed").is_null())
                c.seed.reset();
            else
                c.seed = j.at("seed").get<std::uint64_t>();
        }
        take(j, "output", c.output);
        take(j, "threads", c.threads);
        if (j.contains("library")) {
            c.library.clear();
            for (const auto& l : j.at("library")) c.library.push_back(learner_from_json(l));
        }
    } catch (const json::exception& e) {
        throw Error(std::string("invalid config: ") + e.what());
    }
    return c;
}

RunConfig load_config(const std::string& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j, std::move(base));
}

StudyOptions to_study_options(const RunConfig& c) {
    StudyOptions o;
    o.scenario = c.scenario;
    o.methods = c.methods;
    o.reps = c.reps;
    o.boot_B = c.boot_B;
    o.seed = c.seed.value_or(0);
    o.distribution = c.distribution;
    o.interval = c.interval;
    o.level = c.level;
    o.library = c.library;
    o.K = c.K;
    o.inner_folds = c.inner_folds;
    o.clip_eps = c.clip_eps;
    o.lambda_points = c.lambda_points;
    o.lambda_grid = c.lambda_grid;
    o.kappa_grid = c.kappa_grid;
    o.cv_folds = c.cv_folds;
    o.threads = c.threads;
    return o;
}

}  // namespace medsel
