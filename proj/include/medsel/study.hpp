#pragma once

#include "medsel/crossfit.hpp"
#include "medsel/estimator.hpp"
#include "medsel/inference.hpp"
#include "medsel/learners.hpp"
#include "medsel/sim.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace medsel {

/// PRD/ADP: penalized selection; FULL: unpenalized full model; ORACLE:
/// unpenalized on the true set; LM: ORACLE with linear-in-X nuisance fits.
enum class Method { PRD, ADP, FULL, ORACLE, LM };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct StudyOptions {
    ScenarioSpec scenario;
    std::vector<Method> methods{Method::PRD, Method::ADP, Method::FULL, Method::ORACLE, Method::LM};
    int reps = 200;
    int boot_B = 200;  // 0 disables the bootstrap
    std::uint64_t seed = 0;
    PerturbationDistribution distribution = PerturbationDistribution::Exponential;
    BootstrapInterval interval = BootstrapInterval::Basic;
    double level = 0.95;
    std::vector<LearnerSpec> library = default_library();
    int K = 5;
    int inner_folds = 5;
    double clip_eps = 0.01;
    int lambda_points = 101;
    std::vector<double> lambda_grid;  // empty: n-dependent default with lambda_points values
    std::vector<double> kappa_grid{0.5, 1.0, 2.0, 3.0};
    int cv_folds = 10;
    int threads = 1;
};

struct MethodRecord {
    Method method = Method::PRD;
    bool ok = false;
    std::string error;
    MediatorSet selected;
    bool contains_true = false;
    int non_mediators = 0;
    double nde = 0.0;
    double nie = 0.0;
    double lambda = 0.0;
    double kappa = 0.0;
    std::optional<EffectIntervals> boot;
    std::optional<EffectIntervals> delta;
};

struct ReplicationRecord {
    int rep = 0;
    std::uint64_t seed = 0;
    double true_nde = 0.0;
    double true_nie = 0.0;
    std::vector<MethodRecord> methods;
    std::vector<double> nuisance_rmse;  // Y, D, mean over mediators; empty without a learner fit
    std::string error;                  // set when the shared nuisance step failed
};

struct Coverage {
    int hits = 0;
    int total = 0;
    double rate() const;
};

struct MethodSummary {
    Method method = Method::PRD;
    int n_ok = 0;
    double pc = 0.0;
    double mn = 0.0;
    double bias_nde = 0.0, bias_nie = 0.0;
    double mcse_bias_nde = 0.0, mcse_bias_nie = 0.0;  // sd / sqrt(n_ok)
    double sd_nde = 0.0, sd_nie = 0.0;
    double mean_delta_se_nie = 0.0;  // mean half-width / z
    Coverage boot_nde, boot_nie, delta_nde, delta_nie;
};

struct SimulationResult {
    StudyOptions options;
    std::vector<ReplicationRecord> replications;
    std::vector<MethodSummary> summary;
    int failed_replications = 0;
};

/// Runs every method on `reps` independently generated data sets. Replication r
/// draws from derive_seed(seed, {replication, r}), so results do not depend on
/// the thread budget. Throws when more than 2% of replications fail.
SimulationResult run_study(const StudyOptions& opts);

std::vector<MethodSummary> summarize(const std::vector<ReplicationRecord>& reps, const StudyOptions& opts);

void write_replications_csv(const SimulationResult& r, const std::filesystem::path& path);
/// coefficients,n,weight_version,scenario,PC,MN; one row per selecting method.
void write_table1_csv(const SimulationResult& r, const std::filesystem::path& path);
void write_coverage_csv(const SimulationResult& r, const std::filesystem::path& path);

}  // namespace medsel
