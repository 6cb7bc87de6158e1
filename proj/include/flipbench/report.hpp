#pragma once

#include "flipbench/baselines.hpp"
#include "flipbench/predictor.hpp"
#include "flipbench/record.hpp"
#include "flipbench/stats.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flipbench {

// Humanness flag conventions. These are flipbench choices, not published
// cutoffs; every flag in a report is printed beside its threshold and rule.
struct Thresholds {
    double se_multiplier = 2.0;
    double first_flip_cutoff = 0.6;
    std::uint64_t min_windows_stats = 30;
    std::uint64_t predictor_windows_per_fold = 10;

    void validate() const;
};

enum class BaselineMode { Exact, MonteCarlo };
enum class NGramMode { Window, Sequence };

std::string_view to_string(BaselineMode mode) noexcept;
BaselineMode baseline_mode_from_string(std::string_view s);
std::string_view to_string(NGramMode mode) noexcept;
NGramMode ngram_mode_from_string(std::string_view s);

struct ReportOptions {
    int window = 8;
    int run_window = 7; // run statistics use this prefix of each window
    std::vector<int> ngram_orders{2, 3};
    NGramMode ngram_mode = NGramMode::Window;
    bool include_partial = false;
    BaselineMode baseline_mode = BaselineMode::Exact;
    std::uint64_t baseline_samples = 200000;
    std::uint64_t baseline_seed = 0;
    bool run_predictor = true;
    CVConfig cv;
    Thresholds thresholds;
    HumanBaselineRegistry human;
    // prompt id -> instruction order, for the prompt-order contingency table.
    std::map<std::string, PromptOrder> prompt_orders;
    // Optional human n-gram reference fractions by order (2^n entries).
    std::map<int, std::vector<double>> human_ngram_fractions;

    ReportOptions();
    void validate() const;
};

/// Everything that influences a report, in a fixed key order.
nlohmann::ordered_json to_json(const ReportOptions& options);

struct Yield {
    std::uint64_t records = 0;
    std::uint64_t parsed = 0;
    std::uint64_t partial = 0;
    std::uint64_t refusal = 0;
    std::uint64_t unparseable = 0;
    std::uint64_t error = 0;
    std::uint64_t sequences = 0; // sequences fed to the battery
};

// A statistic that could not be computed: `required` units were needed,
// `available` were present.
struct Shortfall {
    std::string unit;
    std::uint64_t required = 0;
    std::uint64_t available = 0;
};

struct FlagResult {
    std::string name;
    bool set = false;
    std::optional<Shortfall> insufficient;
    double value = 0.0;
    double threshold = 0.0;
    std::string rule;
};

struct StatReport {
    CellKey cell;
    std::optional<PromptOrder> order;
    Yield yield;

    std::uint64_t first_heads = 0;
    std::optional<double> heads_proportion; // position 0, over sequences
    std::uint64_t windows = 0;
    std::uint64_t parents = 0;

    std::optional<Shortfall> stats_shortfall;
    std::optional<HeadsCountHistogram> heads;
    std::optional<AlternationHistogram> alternations;
    std::optional<RunLengthStats> runs;
    std::map<int, double> run_ratios;
    std::vector<NGramTable> ngrams;
    std::optional<CorrelationVector> correlation;
    std::optional<CorrelationMatrix> correlation_matrix;

    // Standard errors of window means, clustered by parent sequence and
    // floored at the independent-window baseline value.
    double alternation_se = 0.0;
    double balance_se = 0.0;
    double long_run_ratio = 0.0; // runs of length >= 3 over expectation
    double long_run_ratio_se = 0.0;

    std::optional<Shortfall> predictor_shortfall;
    std::optional<CVResult> predictor;
    std::optional<double> gap_ratio;

    std::vector<FlagResult> flags;

    const FlagResult& flag(const std::string& name) const;
    bool any_flag() const;
};

struct PrimacySummary {
    std::string model;
    std::optional<PrimacyResult> result;
    std::optional<std::string> insufficient; // reason when result is empty
};

struct Report {
    std::string version;
    std::string config_digest;
    std::string input_digest;
    std::string baseline_digest;
    ReportOptions options;
    BaselineTable baseline;     // window length
    BaselineTable run_baseline; // run window length
    std::vector<StatReport> cells;
    std::vector<PrimacySummary> primacy;
};

/// Groups records by cell and runs the full battery on each. Throws
/// InvalidArgument on empty input or invalid options.
Report build_report(std::span<const CollectionRecord> records, const ReportOptions& options);

/// Self-describing report document; every CSV table derives from it alone.
nlohmann::ordered_json to_json(const Report& report);

/// SHA-256 of the compact serialization.
std::string report_digest(const nlohmann::ordered_json& report_doc);

} // namespace flipbench
