#include "medsel/study.hpp"

#include "medsel/csv.hpp"
#include "medsel/effects.hpp"
#include "medsel/error.hpp"
#include "medsel/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace medsel {

std::string to_string(Method m) {
    switch (m) {
        case Method::PRD: return "PRD";
        case Method::ADP: return "ADP";
        case Method::FULL: return "FULL";
        case Method::ORACLE: return "ORACLE";
        case Method::LM: return "LM";
    }
    return "?";
}

Method method_from_string(const std::string& s) {
    for (auto m : {Method::PRD, Method::ADP, Method::FULL, Method::ORACLE, Method::LM})
        if (s == to_string(m)) return m;
    throw Error("unknown method '" + s + "' (expected PRD, ADP, FULL, ORACLE or LM)");
}

double Coverage::rate() const { return total > 0 ? static_cast<double>(hits) / total : std::nan(""); }

namespace {

bool uses_learners(Method m) { return m != Method::LM; }

bool uses_bootstrap(Method m) { return m == Method::PRD || m == Method::ADP || m == Method::ORACLE; }

ReplicationRecord run_replication(const StudyOptions& o, int r) {
    ReplicationRecord rec;
    rec.rep = r;
    rec.seed = derive_seed(o.seed, {stream::replication, static_cast<std::uint64_t>(r)});
    const auto sim = generate(o.scenario, rec.seed);
    const auto& data = sim.data;
    const auto& true_set = sim.truth.true_set;
    rec.true_nde = sim.truth.nde;
    rec.true_nie = sim.truth.nie;

    std::optional<ResidualizedData> res;
    if (std::any_of(o.methods.begin(), o.methods.end(), uses_learners)) {
        try {
            CrossfitOptions cf{o.K, o.inner_folds, o.clip_eps, derive_seed(rec.seed, {stream::crossfit}), 1};
            const auto nf = crossfit(data, o.library, cf);
            const auto diag = nuisance_diagnostics(nf, sim.truth);
            rec.nuisance_rmse = {diag.overall[0], diag.overall[1], diag.overall.tail(data.p()).mean()};
            res = residualize(data, nf);
        } catch (const std::exception& e) {
            rec.error = e.what();
            return rec;
        }
    }

    auto cfg = TuningConfig::defaults(data.n(), o.lambda_points);
    if (!o.lambda_grid.empty()) cfg.lambda_grid = o.lambda_grid;
    cfg.kappa_grid = o.kappa_grid;
    cfg.cv_folds = o.cv_folds;

    for (auto method : o.methods) {
        MethodRecord mr;
        mr.method = method;
        const auto tag = static_cast<std::uint64_t>(method);
        try {
            std::optional<ResidualizedData> lm_res;
            const ResidualizedData* rr = res ? &*res : nullptr;
            MediationFit fit;
            switch (method) {
                case Method::PRD:
                    fit = fit_mediation(*rr, WeightVersion::PRD, cfg, derive_seed(rec.seed, {stream::tuning, tag}));
                    break;
                case Method::ADP:
                    fit = fit_mediation(*rr, WeightVersion::ADP, cfg, derive_seed(rec.seed, {stream::tuning, tag}));
                    break;
                case Method::FULL: fit = fit_mediation(*rr, WeightVersion::NONE, cfg, 0); break;
                case Method::ORACLE: fit = fit_fixed_model(*rr, true_set); break;
                case Method::LM:
                    lm_res = residualize(data, linear_nuisance(data));
                    rr = &*lm_res;
                    fit = fit_fixed_model(*rr, true_set);
                    break;
            }
            const auto eff = estimate_effects(fit);
            mr.nde = eff.nde;
            mr.nie = eff.nie;
            mr.lambda = fit.lambda;
            mr.kappa = fit.kappa;
            mr.selected = fit.selected;
            mr.contains_true = fit.selected.includes(true_set);
            for (int j : fit.selected.indices()) mr.non_mediators += true_set.contains(j) ? 0 : 1;
            mr.delta = delta_ci(fit, sandwich(*rr, fit, fit.selected), o.level);
            if (o.boot_B > 0 && uses_bootstrap(method)) {
                PerturbationScheme scheme{o.distribution, o.boot_B, derive_seed(rec.seed, {stream::bootstrap, tag}),
                                          o.interval, 1};
                mr.boot = bootstrap_cis(*rr, fit, scheme, o.level).intervals;
            }
            mr.ok = true;
        } catch (const std::exception& e) {
            mr.error = e.what();
        }
        rec.methods.push_back(std::move(mr));
    }
    return rec;
}

bool failed(const ReplicationRecord& rec) {
    if (!rec.error.empty()) return true;
    return std::any_of(rec.methods.begin(), rec.methods.end(), [](const auto& m) { return !m.ok; });
}

double median(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const auto h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

void tally(Coverage& c, const IntervalReport& iv, double truth) {
    ++c.total;
    if (iv.lower <= truth && truth <= iv.upper) ++c.hits;
}

std::string num(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    return out;
}

}  // namespace

std::vector<MethodSummary> summarize(const std::vector<ReplicationRecord>& reps, const StudyOptions& opts) {
    const double z = normal_quantile(0.5 + opts.level / 2.0);
    std::vector<MethodSummary> out;
    for (std::size_t k = 0; k < opts.methods.size(); ++k) {
        MethodSummary s;
        s.method = opts.methods[k];
        std::vector<double> nde_err, nie_err, nde, nie, nonmed, se;
        double contains = 0.0;
        for (const auto& rec : reps) {
            if (k >= rec.methods.size()) continue;
            const auto& m = rec.methods[k];
            if (!m.ok) continue;
            ++s.n_ok;
            contains += m.contains_true ? 1.0 : 0.0;
            nonmed.push_back(m.non_mediators);
            nde.push_back(m.nde);
            nie.push_back(m.nie);
            nde_err.push_back(m.nde - rec.true_nde);
            nie_err.push_back(m.nie - rec.true_nie);
            if (m.delta) {
                tally(s.delta_nde, m.delta->nde, rec.true_nde);
                tally(s.delta_nie, m.delta->nie, rec.true_nie);
                se.push_back((m.delta->nie.upper - m.delta->nie.lower) / (2.0 * z));
            }
            if (m.boot) {
                tally(s.boot_nde, m.boot->nde, rec.true_nde);
                tally(s.boot_nie, m.boot->nie, rec.true_nie);
            }
        }
        auto mean = [](const std::vector<double>& v) {
            double t = 0.0;
            for (double x : v) t += x;
            return v.empty() ? std::nan("") : t / static_cast<double>(v.size());
        };
        auto sd = [&](const std::vector<double>& v) {
            if (v.size() < 2) return std::nan("");
            const double mu = mean(v);
            double t = 0.0;
            for (double x : v) t += (x - mu) * (x - mu);
            return std::sqrt(t / static_cast<double>(v.size() - 1));
        };
        if (s.n_ok > 0) {
            s.pc = contains / s.n_ok;
            s.mn = median(nonmed);
        } else {
            s.pc = s.mn = std::nan("");
        }
        s.bias_nde = mean(nde_err);
        s.bias_nie = mean(nie_err);
        s.sd_nde = sd(nde);
        s.sd_nie = sd(nie);
        s.mcse_bias_nde = sd(nde_err) / std::sqrt(static_cast<double>(s.n_ok));
        s.mcse_bias_nie = sd(nie_err) / std::sqrt(static_cast<double>(s.n_ok));
        s.mean_delta_se_nie = mean(se);
        out.push_back(s);
    }
    return out;
}

SimulationResult run_study(const StudyOptions& opts) {
    if (opts.reps < 1) throw Error("reps must be at least 1");
    if (opts.methods.empty()) throw Error("no methods requested");
    if (opts.boot_B != 0 && opts.boot_B < 100) throw Error("boot_B must be 0 (disabled) or at least 100");
    opts.scenario.validate();

    SimulationResult result;
    result.options = opts;
    result.replications.resize(static_cast<std::size_t>(opts.reps));

#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, opts.threads))
    for (int r = 0; r < opts.reps; ++r) result.replications[static_cast<std::size_t>(r)] = run_replication(opts, r);

    for (const auto& rec : result.replications) result.failed_replications += failed(rec) ? 1 : 0;
    if (result.failed_replications > 0.02 * opts.reps) {
        std::string first;
        for (const auto& rec : result.replications) {
            if (!rec.error.empty()) first = rec.error;
            for (const auto& m : rec.methods)
                if (first.empty() && !m.ok) first = to_string(m.method) + ": " + m.error;
            if (!first.empty()) break;
        }
        throw Error(std::to_string(result.failed_replications) + " of " + std::to_string(opts.reps) +
                    " replications failed (limit 2%); first failure: " + first);
    }
    result.summary = summarize(result.replications, opts);
    return result;
}

void write_replications_csv(const SimulationResult& r, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "rep,seed,method,ok,error,selected,contains_true,non_mediators,nde,nie,true_nde,true_nie,lambda,kappa,"
           "boot_nde_lower,boot_nde_upper,boot_nie_lower,boot_nie_upper,"
           "delta_nde_lower,delta_nde_upper,delta_nie_lower,delta_nie_upper,rmse_y,rmse_d,rmse_m\n";
    for (const auto& rec : r.replications) {
        std::vector<std::string> rmse(3);
        for (std::size_t i = 0; i < rec.nuisance_rmse.size() && i < 3; ++i) rmse[i] = num(rec.nuisance_rmse[i]);
        if (rec.methods.empty()) {
            csv::Row row{std::to_string(rec.rep), std::to_string(rec.seed), "", "0", rec.error};
            row.resize(25);
            out << csv::join(row) << '\n';
            continue;
        }
        for (const auto& m : rec.methods) {
            std::string sel;
            for (int j : m.selected.indices()) sel += (sel.empty() ? "" : " ") + std::to_string(j + 1);
            csv::Row row{std::to_string(rec.rep), std::to_string(rec.seed), to_string(m.method), m.ok ? "1" : "0",
                         m.error, sel, m.contains_true ? "1" : "0", std::to_string(m.non_mediators), num(m.nde),
                         num(m.nie), num(rec.true_nde), num(rec.true_nie), num(m.lambda), num(m.kappa)};
            for (const auto* iv : {m.boot ? &*m.boot : nullptr, m.delta ? &*m.delta : nullptr}) {
                if (iv) {
                    for (double v : {iv->nde.lower, iv->nde.upper, iv->nie.lower, iv->nie.upper}) row.push_back(num(v));
                } else {
                    row.insert(row.end(), 4, "");
                }
            }
            row.insert(row.end(), rmse.begin(), rmse.end());
            out << csv::join(row) << '\n';
        }
    }
}

void write_table1_csv(const SimulationResult& r, const std::filesystem::path& path) {
    auto out = open_out(path);
    const auto& sc = r.options.scenario;
    out << "coefficients,n,weight_version,scenario,PC,MN\n";
    for (const auto& s : r.summary) {
        if (s.method != Method::PRD && s.method != Method::ADP) continue;
        out << csv::join({to_string(sc.regime), std::to_string(sc.n), to_string(s.method), sc.confounding(), num(s.pc),
                          num(s.mn)})
            << '\n';
    }
}

void write_coverage_csv(const SimulationResult& r, const std::filesystem::path& path) {
    auto out = open_out(path);
    const auto& sc = r.options.scenario;
    out << "coefficients,scenario,n,method,reps_ok,nde_coverage_bootstrap,nie_coverage_bootstrap,"
           "nde_coverage_delta,nie_coverage_delta,bias_nde,bias_nie,mcse_bias_nde,mcse_bias_nie,sd_nde,sd_nie,"
           "mean_delta_se_nie\n";
    for (const auto& s : r.summary) {
        out << csv::join({to_string(sc.regime), sc.confounding(), std::to_string(sc.n), to_string(s.method),
                          std::to_string(s.n_ok), num(s.boot_nde.rate()), num(s.boot_nie.rate()),
                          num(s.delta_nde.rate()), num(s.delta_nie.rate()), num(s.bias_nde), num(s.bias_nie),
                          num(s.mcse_bias_nde), num(s.mcse_bias_nie), num(s.sd_nde), num(s.sd_nie),
                          num(s.mean_delta_se_nie)})
            << '\n';
    }
}

}  // namespace medsel
