#pragma once

#include "moelab/harness.hpp"

#include <string>
#include <vector>

namespace moelab {

// Thrown for malformed configs and unusable paths; the CLI maps it to exit 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Campaign config parsed from one JSON document. Optional sections carry the
// sweep grid, tune grid, and the lemma-check parameters.
struct CampaignConfig {
    RunConfig run;
    std::vector<double> lr_grid;
    MultiplierGrid tune_grid;
    // gram-check
    std::size_t gram_m = 256, gram_n = 256;
    double gram_sigma = 0.0625;
    std::size_t gram_seeds = 16;
    // cross-layer-check
    std::vector<double> cross_layer_multipliers = {1, 2, 4, 8};
    std::size_t cross_layer_seeds = 4;
    // emit-config
    std::size_t depth = 1;
};

CampaignConfig load_campaign_config(const std::string& path);

// CSV schemas. Every file starts with a header row; doubles print with 17
// significant digits so identical runs produce byte-identical files.
void write_series_csv(const std::string& path, const std::vector<RunRecord>& runs);
void write_verdicts_csv(const std::string& path, const std::vector<Verdict>& verdicts);
void write_sweep_csv(const std::string& path, const SweepResult& sweep);
void write_loss_csv(const std::string& path, const std::vector<RunRecord>& runs);
void write_tune_csv(const std::string& path, const TuneResult& tune);

std::string coord_check_summary_json(const RunConfig& cfg, const CoordCheckResult& res);
std::string sweep_summary_json(const RunConfig& cfg, const SweepResult& res);
std::string tune_summary_json(const TuneResult& res);
std::string gram_report_json(const GramReport& rep);
std::string cross_layer_report_json(const CrossLayerReport& rep);
std::string router_collapse_report_json(const RouterCollapseReport& rep);

void write_text_file(const std::string& path, const std::string& content);

std::string format_double(double v);

} // namespace moelab
