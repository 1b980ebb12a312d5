#pragma once

#include <chrono>
#include <filesystem>
#include <span>
#include <string>

#include <json.hpp>

#include "cirlab/experiment.hpp"

namespace cirlab {

inline constexpr const char* kResultsHeader =
    "scheme,sigma,dt_max,l1,l1_stderr,l2,l2_stderr,avg_dt,soft_zero_fraction,num_paths,status";
inline constexpr const char* kRatesHeader = "scheme,sigma,norm,slope,slope_stderr,intercept";

/// %.17g, with "nan"/"inf" spelled in lower case.
std::string format_double(double v);

std::string results_csv(std::span<const ErrorRow> rows);
std::string rates_csv(std::span<const RateRow> rates);

/// Parses the campaign config. Field names mirror ExperimentConfig; "schemes"
/// entries are either a scheme name or {"scheme", "controller", "label"}.
/// Throws std::invalid_argument on unknown or malformed fields.
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

/// FNV-1a 64 of the canonical config JSON, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

struct RunClock {
    std::chrono::system_clock::time_point started;
    std::chrono::system_clock::time_point finished;
};

nlohmann::json manifest_json(const ExperimentConfig& cfg, const CampaignResult& result,
                             const RunClock& clock, int threads);

struct CampaignFiles {
    std::filesystem::path results;
    std::filesystem::path rates;
    std::filesystem::path manifest;
};

/// Writes results.csv, rates.csv and manifest.json into `dir` (created if needed).
CampaignFiles write_campaign(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                             const CampaignResult& result, const RunClock& clock, int threads);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace cirlab
