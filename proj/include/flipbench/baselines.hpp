#pragma once

#include "flipbench/kernels.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace flipbench {

/// Reference values of every battery statistic for windows of length k
/// under fair (or p-biased, Monte Carlo only) i.i.d. flips. All
/// expectations are per window.
struct BaselineTable {
    int k = 0;
    bool exact = false;
    std::uint64_t samples = 0; // 2^k when exact
    std::uint64_t seed = 0;    // Monte Carlo only
    double p_heads = 0.5;

    std::vector<double> heads_pmf; // [k+1]
    std::vector<double> heads_pmf_se;
    std::vector<double> alternation_pmf; // [k]
    std::vector<double> alternation_pmf_se;
    double alternation_mean = 0.0;
    double alternation_mean_se = 0.0;
    double alternation_sd = 0.0; // per-window standard deviation

    std::vector<double> expected_runs;    // [k+1], index L; [0] unused
    std::vector<double> expected_runs_sd; // per-window standard deviation
    std::vector<double> expected_runs_se;

    std::map<int, std::vector<double>> ngram_fractions; // order -> [2^n]
    std::map<int, std::vector<double>> ngram_fractions_se;

    double mse_floor = 0.25;

    // Raw integer counts the table was derived from.
    kernels::WindowTally tally;

    double heads_mean() const;
};

inline constexpr int kMaxExactWindow = 24;

/// Full enumeration of all 2^k windows. Throws InvalidArgument for k outside
/// 1..24; use monte_carlo_baseline beyond that.
BaselineTable exact_baseline(int k);

/// Seeded sampling of `samples` windows (samples >= 1000, k <= 64). Reports
/// a standard error alongside every statistic.
BaselineTable monte_carlo_baseline(int k, std::uint64_t samples, std::uint64_t seed, double p_heads = 0.5);

nlohmann::ordered_json to_json(const BaselineTable& table);

// Published human-bias constants. Each value carries a citation string.
struct HumanConstant {
    double value = 0.0;
    std::string citation;
};

class HumanBaselineRegistry {
public:
    static constexpr const char* kAlternationRate = "alternation_rate";
    static constexpr const char* kFirstFlipHeadsRate = "first_flip_heads_rate";
    static constexpr const char* kHeadsFirstGivenHeadsFirstPrompt = "heads_first_given_heads_first_prompt";
    static constexpr const char* kTailsFirstGivenTailsFirstPrompt = "tails_first_given_tails_first_prompt";
    static constexpr const char* kHumanMseFloor = "human_mse_floor";

    /// Shipped defaults.
    HumanBaselineRegistry();

    const HumanConstant& at(const std::string& key) const;
    double value(const std::string& key) const { return at(key).value; }
    const std::map<std::string, HumanConstant>& entries() const noexcept { return entries_; }

    /// Replaces one entry. Throws DataError if the key is unknown, the
    /// citation is empty, or the value is out of range.
    void set(const std::string& key, HumanConstant constant);

    /// Applies overrides from a registry document: an object mapping key to
    /// {"value": number, "citation": string}, optionally nested under
    /// "human_baselines".
    void apply_overrides(const nlohmann::json& doc);

private:
    std::map<std::string, HumanConstant> entries_;
};

/// Defaults, overridden by the file at `path` when given. Throws DataError
/// on unreadable or malformed files.
HumanBaselineRegistry load_human_baselines(const std::optional<std::filesystem::path>& path = std::nullopt);

nlohmann::ordered_json to_json(const HumanBaselineRegistry& registry);

} // namespace flipbench
