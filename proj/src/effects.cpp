#include "medsel/effects.hpp"

#include "medsel/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace medsel {

Effects estimate_effects(const MediationFit& fit) {
    return {fit.gamma(), fit.alpha_hat.dot(fit.beta())};
}

EffectReport build_report(const MediationFit& fit, const std::vector<EffectIntervals>& intervals,
                          const std::vector<std::string>& names) {
    const auto p = static_cast<int>(fit.alpha_hat.size());
    if (fit.theta_hat.size() != p + 1) throw Error("fit has inconsistent dimensions");
    if (!names.empty() && static_cast<int>(names.size()) != p) throw Error("mediator names do not match p");

    EffectReport out;
    const auto eff = estimate_effects(fit);
    for (const auto& iv : intervals) {
        out.nde.push_back(iv.nde);
        out.nie.push_back(iv.nie);
    }
    if (intervals.empty()) {
        out.nde.push_back({eff.nde, eff.nde, eff.nde, 0.0, IntervalMethod::DeltaMethod});
        out.nie.push_back({eff.nie, eff.nie, eff.nie, 0.0, IntervalMethod::DeltaMethod});
    }
    out.selected = fit.selected;
    out.model_size = static_cast<int>(fit.selected.size());
    out.tuning = {fit.lambda, fit.kappa, fit.weights.version};
    out.warnings = fit.warnings;
    for (int j = 0; j < p; ++j) {
        const double a = fit.alpha_hat[j], b = fit.theta_hat[j + 1];
        out.per_mediator.push_back({j, names.empty() ? "M" + std::to_string(j + 1) : names[static_cast<std::size_t>(j)],
                                    a, b, a * b});
    }
    std::stable_sort(out.per_mediator.begin(), out.per_mediator.end(),
                     [](const auto& x, const auto& y) { return std::abs(x.product) > std::abs(y.product); });
    return out;
}

nlohmann::json to_json(const IntervalReport& r) {
    return {{"estimate", r.estimate}, {"lower", r.lower}, {"upper", r.upper}, {"level", r.level},
            {"method", to_string(r.method)}};
}

nlohmann::json to_json(const EffectReport& r) {
    nlohmann::json j;
    j["nde"] = nlohmann::json::array();
    for (const auto& iv : r.nde) j["nde"].push_back(to_json(iv));
    j["nie"] = nlohmann::json::array();
    for (const auto& iv : r.nie) j["nie"].push_back(to_json(iv));
    j["selected"] = nlohmann::json::array();
    for (int idx : r.selected.indices()) j["selected"].push_back(idx + 1);
    j["per_mediator"] = nlohmann::json::array();
    for (const auto& m : r.per_mediator)
        j["per_mediator"].push_back(
            {{"index", m.index + 1}, {"name", m.name}, {"alpha", m.alpha}, {"beta", m.beta}, {"product", m.product}});
    j["model_size"] = r.model_size;
    j["tuning"] = {{"lambda", r.tuning.lambda}, {"kappa", r.tuning.kappa}, {"weights", to_string(r.tuning.version)}};
    j["warnings"] = r.warnings;
    return j;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

void interval_lines(std::ostringstream& os, const char* label, const std::vector<IntervalReport>& rows) {
    for (const auto& r : rows) {
        os << "  " << label << "  " << fmt(r.estimate);
        if (r.level > 0.0)
            os << "  [" << fmt(r.lower) << ", " << fmt(r.upper) << "]  " << fmt(100.0 * r.level).substr(0, 5) << "% "
               << to_string(r.method);
        os << '\n';
    }
}

}  // namespace

std::string render_text(const EffectReport& r) {
    std::ostringstream os;
    os << "Effects\n";
    interval_lines(os, "NDE", r.nde);
    interval_lines(os, "NIE", r.nie);
    os << "\nTuning: weights=" << to_string(r.tuning.version) << " lambda=" << fmt(r.tuning.lambda)
       << " kappa=" << fmt(r.tuning.kappa) << '\n';
    os << "Selected mediators (" << r.model_size << "):";
    for (int idx : r.selected.indices()) os << ' ' << idx + 1;
    os << "\n\n";
    os << "  index  name                  alpha       beta    product\n";
    for (const auto& m : r.per_mediator) {
        char line[160];
        std::snprintf(line, sizeof line, "  %5d  %-16.16s %10.4f %10.4f %10.4f\n", m.index + 1, m.name.c_str(),
                      m.alpha, m.beta, m.product);
        os << line;
    }
    if (!r.warnings.empty()) {
        os << "\nWarnings:\n";
        for (const auto& w : r.warnings) os << "  - " << w << '\n';
    }
    return os.str();
}

}  // namespace medsel
