#include "medsel/commands.hpp"
#include "medsel/config.hpp"
#include "medsel/error.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

// Flags left unset keep the value from --config (or the built-in default).
struct Flags {
    std::string config;
    std::optional<std::string> data, treatment, outcome, weights, confounding, regime, distribution, interval, output;
    std::optional<std::vector<std::string>> mediators, confounders, methods, learners;
    std::optional<int> n, p, q, reps, K, inner_folds, cv_folds, lambda_points, boot_B, threads;
    std::optional<std::vector<int>> true_set;
    std::optional<std::vector<double>> lambda_grid, kappa_grid;
    std::optional<double> clip_eps, level;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> inputs;
};

void add_common(CLI::App* app, Flags& f) {
    app->add_option("--config", f.config, "JSON configuration file; flags override its values");
    app->add_option("--output,-o", f.output, "Output directory");
    app->add_option("--seed", f.seed, "Master seed for every stochastic step");
    app->add_option("--threads", f.threads, "Thread budget");
}

void add_estimation(CLI::App* app, Flags& f) {
    app->add_option("--folds", f.K, "Cross-fitting folds K");
    app->add_option("--inner-folds", f.inner_folds, "Folds for the stacking cross-validation");
    app->add_option("--cv-folds", f.cv_folds, "Folds for tuning lambda and kappa");
    app->add_option("--lambda-points", f.lambda_points, "Size of the default lambda grid");
    app->add_option("--lambda-grid", f.lambda_grid, "Explicit lambda grid");
    app->add_option("--kappa-grid", f.kappa_grid, "kappa grid");
    app->add_option("--clip-eps", f.clip_eps, "Propensity clipping bound");
    app->add_option("--boot-B", f.boot_B, "Perturbation bootstrap replications (0 disables)");
    app->add_option("--distribution", f.distribution, "Perturbation weights: exponential or two_point");
    app->add_option("--interval", f.interval, "Bootstrap interval: basic or percentile");
    app->add_option("--level", f.level, "Confidence level");
    app->add_option("--learners", f.learners, "Library members by name (e.g. mean linear poly2x krr_s1 knn10)");
}

void add_scenario(CLI::App* app, Flags& f) {
    app->add_option("--confounding", f.confounding, "Confounding forms, e.g. LNN");
    app->add_option("--regime", f.regime, "Coefficient regime: Large, Small or SmallAlpha");
    app->add_option("--n", f.n, "Sample size");
    app->add_option("--p", f.p, "Number of candidate mediators");
    app->add_option("--q", f.q, "Number of confounders");
    app->add_option("--true-set", f.true_set, "True mediators (1-based)");
}

nlohmann::json overrides(const Flags& f) {
    nlohmann::json j = nlohmann::json::object();
    auto set = [&](const char* key, const auto& opt) {
        if (opt) j[key] = *opt;
    };
    set("data", f.data);
    set("weights", f.weights);
    set("distribution", f.distribution);
    set("interval", f.interval);
    set("output", f.output);
    set("methods", f.methods);
    set("reps", f.reps);
    set("K", f.K);
    set("inner_folds", f.inner_folds);
    set("cv_folds", f.cv_folds);
    set("lambda_points", f.lambda_points);
    set("lambda_grid", f.lambda_grid);
    set("kappa_grid", f.kappa_grid);
    set("clip_eps", f.clip_eps);
    set("boot_B", f.boot_B);
    set("level", f.level);
    set("seed", f.seed);
    set("threads", f.threads);
    set("library", f.learners);
    if (!f.inputs.empty()) j["inputs"] = f.inputs;

    nlohmann::json roles = nlohmann::json::object();
    if (f.treatment) roles["treatment"] = *f.treatment;
    if (f.outcome) roles["outcome"] = *f.outcome;
    if (f.mediators) roles["mediators"] = *f.mediators;
    if (f.confounders) roles["confounders"] = *f.confounders;
    if (!roles.empty()) j["roles"] = roles;

    nlohmann::json sc = nlohmann::json::object();
    if (f.confounding) sc["confounding"] = *f.confounding;
    if (f.regime) sc["regime"] = *f.regime;
    if (f.n) sc["n"] = *f.n;
    if (f.p) sc["p"] = *f.p;
    if (f.q) sc["q"] = *f.q;
    if (f.true_set) sc["true_set"] = *f.true_set;
    if (!sc.empty()) j["scenario"] = sc;
    return j;
}

std::vector<std::string> split_list(const std::vector<std::string>& v) {
    std::vector<std::string> out;
    for (const auto& s : v) {
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) out.push_back(item);
    }
    return out;
}

int fail(int code, const std::string& command, const std::string& message) {
    nlohmann::json err = {{"error", message}, {"command", command}, {"exit_code", code}};
    std::cerr << err.dump() << std::endl;
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mediator selection and natural effect estimation with cross-fitted nuisances"};
    app.require_subcommand(1);
    Flags f;

    auto* an = app.add_subcommand("analyze", "Estimate NDE/NIE with mediator selection on a CSV data set");
    add_common(an, f);
    add_estimation(an, f);
    an->add_option("--data", f.data, "CSV file with a header row");
    an->add_option("--treatment", f.treatment, "Binary treatment column");
    an->add_option("--outcome", f.outcome, "Outcome column");
    an->add_option("--mediators", f.mediators, "Candidate mediator columns (space or comma separated)");
    an->add_option("--confounders", f.confounders, "Confounder columns (space or comma separated)");
    an->add_option("--weights", f.weights, "Penalty weights: PRD, ADP or NONE");

    auto* si = app.add_subcommand("simulate", "Run a simulation study");
    add_common(si, f);
    add_estimation(si, f);
    add_scenario(si, f);
    si->add_option("--reps", f.reps, "Replications");
    si->add_option("--methods", f.methods, "Subset of PRD ADP FULL ORACLE LM");

    auto* re = app.add_subcommand("report", "Render tables from simulation outputs");
    add_common(re, f);
    re->add_option("--input,-i", f.inputs, "Result directories from simulate");

    auto* ge = app.add_subcommand("generate", "Write one simulated data set as CSV with its ground truth");
    add_common(ge, f);
    add_scenario(ge, f);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    std::string command;
    for (auto* sub : {an, si, re, ge})
        if (sub->parsed()) command = sub->get_name();

    if (f.mediators) f.mediators = split_list(*f.mediators);
    if (f.confounders) f.confounders = split_list(*f.confounders);
    if (f.methods) f.methods = split_list(*f.methods);
    if (f.learners) f.learners = split_list(*f.learners);

    medsel::RunConfig cfg;
    try {
        if (!f.config.empty()) cfg = medsel::load_config(f.config, cfg);
        cfg = medsel::config_from_json(overrides(f), cfg);
        cfg.command = command;
        cfg.resolve();
    } catch (const std::exception& e) {
        return fail(1, command, e.what());
    }

    try {
        std::string out;
        if (command == "analyze") out = medsel::analyze(cfg);
        else if (command == "simulate") out = medsel::simulate(cfg);
        else if (command == "report") out = medsel::report(cfg);
        else out = medsel::generate_data(cfg);
        std::cout << out;
    } catch (const std::exception& e) {
        return fail(2, command, e.what());
    }
    return 0;
}
