#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mots/metrics.hpp"
#include "mots/models.hpp"
#include "mots/phd_filter.hpp"
#include "mots/smoother.hpp"

namespace mots {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Full campaign configuration. Seed derivation: run r draws from stream
/// child(r) of the base seed; within a run, child 0 drives scenario and
/// measurement generation and child 1 is the smoother base, whose child p
/// drives particle p.
struct CampaignConfig {
    ScenarioConfig scenario = ScenarioConfig::nominal();
    FilterParams filter;
    SmootherConfig smoother;
    GospaParams gospa;
    TgospaParams tgospa;
    std::size_t runs = 100;
    std::uint64_t seed = 1;
    std::size_t workers = 0;  // 0 = hardware concurrency
    std::string variant = "no-change";
    std::string output_dir = "out";

    CampaignConfig();
    void validate() const;
};

/// Parses the flat `section.key = value` configuration text. Unknown keys
/// raise ConfigError.
CampaignConfig parse_config_text(const std::string& text);
CampaignConfig parse_config_file(const std::string& path);

/// Applies a Table-I scenario variant tag: no-change, clutter-10,
/// clutter-100, pd-098, pd-08.
void apply_variant(CampaignConfig& config, const std::string& tag);

struct RunResult {
    bool ok = false;
    std::string error;
    std::vector<GospaResult> phd_gospa;     // per time step
    std::vector<GospaResult> hybrid_gospa;  // per time step
    TgospaResult hybrid_tgospa;             // normalized per time step
    std::vector<Trajectory> truth;          // retained for the first run only
    std::vector<Trajectory> estimate;
};

struct CampaignResult {
    std::vector<RunResult> runs;
    std::size_t completed = 0;
    bool failed = false;  // more than 10% of runs errored

    // Averages of the per-run per-step means over completed runs.
    GospaResult phd_mean;
    GospaResult hybrid_mean;
    TgospaResult tgospa_mean;
    double phd_total_stderr = 0.0;
    double hybrid_total_stderr = 0.0;
    double tgospa_total_stderr = 0.0;
};

/// One full run: scenario, measurements, forward filter, backward
/// simulation, trajectory estimate, metrics. keep_artifacts retains the
/// truth and estimate trajectory sets for export.
RunResult run_single(const CampaignConfig& config, std::size_t run_index, bool keep_artifacts);

/// Seeded Monte Carlo campaign; runs execute concurrently, aggregation is
/// in run order. A run failure is recorded and the campaign continues.
CampaignResult run_campaign(const CampaignConfig& config);

/// Writes gospa_timeseries.csv, tgospa_summary.csv, summary.json and
/// trajectories_run0.jsonl into the directory (created if needed).
void emit_outputs(const CampaignResult& result, const CampaignConfig& config,
                  const std::string& directory);

}  // namespace mots
