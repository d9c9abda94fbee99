#pragma once

#include "medsel/config.hpp"
#include "medsel/effects.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace medsel {

struct AnalysisResult {
    EffectReport report;
    nlohmann::json json;  // report.json contents
    std::string text;     // report.txt contents
};

/// Cross-fit, select, estimate and build both interval types for a CSV data set.
AnalysisResult run_analysis(const RunConfig& cfg);

/// The commands write into cfg.output (created if missing) and return a short summary for stdout.
std::string analyze(const RunConfig& cfg);
std::string simulate(const RunConfig& cfg);
std::string report(const RunConfig& cfg);
/// Writes one simulated data set as data.csv plus truth.json.
std::string generate_data(const RunConfig& cfg);

void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace medsel
