#include "medsel/commands.hpp"

#include "medsel/crossfit.hpp"
#include "medsel/csv.hpp"
#include "medsel/error.hpp"
#include "medsel/rng.hpp"
#include "medsel/sim.hpp"
#include "medsel/study.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace medsel {

namespace fs = std::filesystem;
using nlohmann::json;

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << content;
}

namespace {

fs::path prepare_output(const RunConfig& cfg) {
    fs::path dir(cfg.output);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory '" + cfg.output + "': " + ec.message());
    write_text(dir / "resolved_config.json", to_json(cfg).dump(2) + "\n");
    return dir;
}

json nuisance_json(const NuisanceFit& nf) {
    json targets = json::array();
    for (const auto& t : nf.per_target_ensemble) {
        json weights = json::object();
        if (!t.constant) {
            const VectorXd w = t.mean_weights();
            for (Eigen::Index i = 0; i < w.size(); ++i) weights[nf.member_names[static_cast<std::size_t>(i)]] = w[i];
        }
        targets.push_back({{"target", t.target}, {"constant", t.constant}, {"mean_weights", weights}});
    }
    return {{"K", nf.K}, {"clip_eps", nf.clip_eps}, {"members", nf.member_names}, {"ensembles", targets},
            {"warnings", nf.warnings}};
}

std::string fmt(double v, const char* f = "%.4f") {
    char buf[40];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct Table {
    csv::Row header;
    std::vector<csv::Row> rows;

    std::size_t col(const std::string& name, const fs::path& src) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw Error("'" + src.string() + "' has no column '" + name + "'");
    }
};

Table read_table(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    Table t;
    if (!csv::read_record(in, t.header)) throw Error("'" + path.string() + "' is empty");
    csv::Row row;
    while (csv::read_record(in, row))
        if (!(row.size() == 1 && row[0].empty())) t.rows.push_back(row);
    return t;
}

}  // namespace

AnalysisResult run_analysis(const RunConfig& cfg) {
    const auto data = load_csv(cfg.data, cfg.roles);
    const std::uint64_t seed = cfg.seed.value_or(0);

    CrossfitOptions cf{cfg.K, cfg.inner_folds, cfg.clip_eps, derive_seed(seed, {stream::crossfit}), cfg.threads};
    const auto nf = crossfit(data, cfg.library, cf);
    const auto res = residualize(data, nf);

    auto tuning = TuningConfig::defaults(data.n(), cfg.lambda_points);
    if (!cfg.lambda_grid.empty()) tuning.lambda_grid = cfg.lambda_grid;
    tuning.kappa_grid = cfg.kappa_grid;
    tuning.cv_folds = cfg.cv_folds;
    auto fit = fit_mediation(res, cfg.weights, tuning, derive_seed(seed, {stream::tuning}));

    std::vector<EffectIntervals> intervals;
    int discarded = 0;
    if (cfg.boot_B > 0) {
        PerturbationScheme scheme{cfg.distribution, cfg.boot_B, derive_seed(seed, {stream::bootstrap}), cfg.interval,
                                  cfg.threads};
        const auto boot = bootstrap_cis(res, fit, scheme, cfg.level);
        discarded = boot.discarded;
        intervals.push_back(boot.intervals);
    }
    try {
        intervals.push_back(delta_ci(fit, sandwich(res, fit, fit.selected), cfg.level));
    } catch (const Error& e) {
        fit.warnings.push_back(std::string("delta-method interval unavailable: ") + e.what());
    }
    for (const auto& w : nf.warnings) fit.warnings.push_back(w);

    AnalysisResult out;
    out.report = build_report(fit, intervals, data.m_names());
    out.json = {{"config", to_json(cfg)},
                {"n", data.n()},
                {"p", data.p()},
                {"report", to_json(out.report)},
                {"bootstrap_discarded", discarded},
                {"nuisance", nuisance_json(nf)}};
    std::ostringstream txt;
    txt << "Mediation analysis of " << cfg.data << " (n=" << data.n() << ", p=" << data.p() << ", seed=" << seed
        << ")\n\n"
        << render_text(out.report) << "\nNuisance ensembles (mean stacking weights over " << nf.K << " folds)\n";
    for (const auto& t : nf.per_target_ensemble) {
        txt << "  " << t.target << ':';
        if (t.constant) {
            txt << " constant\n";
            continue;
        }
        const VectorXd w = t.mean_weights();
        for (Eigen::Index i = 0; i < w.size(); ++i)
            if (w[i] > 0.0) txt << ' ' << nf.member_names[static_cast<std::size_t>(i)] << '=' << fmt(w[i], "%.3f");
        txt << '\n';
    }
    out.text = txt.str();
    return out;
}

std::string analyze(const RunConfig& cfg) {
    const auto result = run_analysis(cfg);
    const auto dir = prepare_output(cfg);
    write_text(dir / "report.json", result.json.dump(2) + "\n");
    write_text(dir / "report.txt", result.text);
    return result.text;
}

std::string simulate(const RunConfig& cfg) {
    const auto result = run_study(to_study_options(cfg));
    const auto dir = prepare_output(cfg);
    write_replications_csv(result, dir / "replications.csv");
    write_table1_csv(result, dir / "table1.csv");
    write_coverage_csv(result, dir / "coverage.csv");

    std::ostringstream os;
    const auto& sc = cfg.scenario;
    os << to_string(sc.regime) << '/' << sc.confounding() << " n=" << sc.n << " p=" << sc.p << " reps=" << cfg.reps
       << " failed=" << result.failed_replications << "\n";
    os << "method     PC      MN  bias(NIE)  cov_boot(NIE)  cov_delta(NIE)\n";
    for (const auto& s : result.summary) {
        char line[160];
        std::snprintf(line, sizeof line, "%-8s %5.3f %6.1f %10.4f %14.3f %15.3f\n", to_string(s.method).c_str(), s.pc,
                      s.mn, s.bias_nie, s.boot_nie.rate(), s.delta_nie.rate());
        os << line;
    }
    return os.str();
}

std::string report(const RunConfig& cfg) {
    std::vector<std::pair<fs::path, fs::path>> found;
    for (const auto& in : cfg.inputs) {
        const fs::path dir(in);
        std::vector<std::string> missing;
        for (const char* f : {"table1.csv", "coverage.csv"})
            if (!fs::is_regular_file(dir / f)) missing.push_back(f);
        if (!missing.empty()) {
            std::string msg = "missing result files in '" + dir.string() + "': expected table1.csv and coverage.csv (missing";
            for (const auto& m : missing) msg += " " + m;
            throw Error(msg + ")");
        }
        found.emplace_back(dir / "table1.csv", dir / "coverage.csv");
    }

    std::ostringstream md;
    md << "| Coefficients | n | Weight version | Scenario | PC | MN |\n|---|---|---|---|---|---|\n";
    std::ostringstream long_csv;
    long_csv << "estimand,method,n,coverage\n";
    std::ostringstream cov_md;
    cov_md << "| Coefficients | Scenario | n | Method | NDE boot | NIE boot | NDE delta | NIE delta | NIE bias |\n"
              "|---|---|---|---|---|---|---|---|---|\n";

    auto cell = [](const std::string& s) -> std::string {
        if (s.empty()) return "-";
        return fmt(std::stod(s), "%.3f");
    };
    for (const auto& [t1, cov] : found) {
        const auto tab = read_table(t1);
        const std::size_t c_coef = tab.col("coefficients", t1), c_n = tab.col("n", t1),
                          c_w = tab.col("weight_version", t1), c_s = tab.col("scenario", t1), c_pc = tab.col("PC", t1),
                          c_mn = tab.col("MN", t1);
        for (const auto& r : tab.rows)
            md << "| " << r.at(c_coef) << " | " << r.at(c_n) << " | " << r.at(c_w) << " | " << r.at(c_s) << " | "
               << cell(r.at(c_pc)) << " | " << fmt(std::stod(r.at(c_mn)), "%.1f") << " |\n";

        const auto ct = read_table(cov);
        const std::size_t k_coef = ct.col("coefficients", cov), k_s = ct.col("scenario", cov), k_n = ct.col("n", cov),
                          k_m = ct.col("method", cov), k_nb = ct.col("nde_coverage_bootstrap", cov),
                          k_ib = ct.col("nie_coverage_bootstrap", cov), k_nd = ct.col("nde_coverage_delta", cov),
                          k_id = ct.col("nie_coverage_delta", cov), k_bias = ct.col("bias_nie", cov);
        for (const auto& r : ct.rows) {
            cov_md << "| " << r.at(k_coef) << " | " << r.at(k_s) << " | " << r.at(k_n) << " | " << r.at(k_m) << " | "
                   << cell(r.at(k_nb)) << " | " << cell(r.at(k_ib)) << " | " << cell(r.at(k_nd)) << " | "
                   << cell(r.at(k_id)) << " | " << cell(r.at(k_bias)) << " |\n";
            const std::pair<const char*, std::size_t> series[] = {
                {"NDE", k_nb}, {"NIE", k_ib}, {"NDE", k_nd}, {"NIE", k_id}};
            for (std::size_t s = 0; s < 4; ++s) {
                const auto& v = r.at(series[s].second);
                if (v.empty()) continue;
                long_csv << csv::join({series[s].first, r.at(k_m) + (s < 2 ? "-bootstrap" : "-delta"), r.at(k_n), v})
                         << '\n';
            }
        }
    }

    const std::string text = "## Selection\n\n" + md.str() + "\n## Coverage\n\n" + cov_md.str();
    const auto dir = prepare_output(cfg);
    write_text(dir / "report.md", text);
    write_text(dir / "coverage_long.csv", long_csv.str());
    return text;
}

std::string generate_data(const RunConfig& cfg) {
    const auto sim = generate(cfg.scenario, cfg.seed.value_or(0));
    const auto dir = prepare_output(cfg);
    const auto& d = sim.data;

    std::ofstream out(dir / "data.csv", std::ios::binary);
    if (!out) throw Error("cannot write '" + (dir / "data.csv").string() + "'");
    csv::Row header{"D"};
    for (const auto& n : d.x_names()) header.push_back(n);
    for (const auto& n : d.m_names()) header.push_back(n);
    header.push_back("Y");
    out << csv::join(header) << '\n';
    char buf[40];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (int i = 0; i < d.n(); ++i) {
        csv::Row row{num(d.d()[i])};
        for (int c = 0; c < d.q(); ++c) row.push_back(num(d.x()(i, c)));
        for (int j = 0; j < d.p(); ++j) row.push_back(num(d.m()(i, j)));
        row.push_back(num(d.y()[i]));
        out << csv::join(row) << '\n';
    }

    const auto& t = sim.truth;
    json ts = json::array();
    for (int j : t.true_set.indices()) ts.push_back(j + 1);
    json truth = {{"nde", t.nde},
                  {"nie", t.nie},
                  {"true_set", ts},
                  {"alpha", std::vector<double>(t.coef.alpha.data(), t.coef.alpha.data() + t.coef.alpha.size())},
                  {"beta", std::vector<double>(t.coef.beta.data(), t.coef.beta.data() + t.coef.beta.size())},
                  {"gamma", t.coef.gamma}};
    write_text(dir / "truth.json", truth.dump(2) + "\n");
    return "wrote " + (dir / "data.csv").string() + " (n=" + std::to_string(d.n()) + ", p=" + std::to_string(d.p()) +
           ") and truth.json; true NDE=" + num(t.nde) + " NIE=" + num(t.nie) + "\n";
}

}  // namespace medsel
