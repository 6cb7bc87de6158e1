#pragma once

#include "flipbench/collector.hpp"
#include "flipbench/report.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>

namespace flipbench {

// Config file layout (JSON object; every section optional):
//   "endpoint":   base_url, model, timeout_s, max_retries, backoff_base_s,
//                 max_parallel, rpm_cap
//   "plan":       prompts [{id, text, expected_flips, order}], temperatures,
//                 replicates, seed, allow_high_temperature
//   "analysis":   window, run_window, ngram_orders, ngram_mode,
//                 include_partial, baseline {mode, samples, seed},
//                 run_predictor, prompt_orders {id: order},
//                 human_ngram_fractions {n: [..]}
//   "predictor":  folds, lambda_grid, grid_size, grid_ratio, seed,
//                 tolerance, max_sweeps
//   "thresholds": se_multiplier, first_flip_cutoff, min_windows_stats,
//                 predictor_windows_per_fold
//   "human_baselines": {key: {value, citation}}
//   "human_baselines_file": path, relative to the config file
// The API key is never read from the config; an "api_key" entry is rejected.
struct Config {
    EndpointConfig endpoint;
    SweepPlan plan = default_plan();
    ReportOptions report;
};

/// Throws DataError on unreadable files, malformed JSON, unknown keys or
/// wrongly typed values.
Config config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
Config load_config(const std::optional<std::filesystem::path>& path);

} // namespace flipbench
