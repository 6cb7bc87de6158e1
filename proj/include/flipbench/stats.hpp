#pragma once

#include "flipbench/baselines.hpp"
#include "flipbench/kernels.hpp"
#include "flipbench/record.hpp"
#include "flipbench/sequence.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flipbench {

/// Fraction of sequences whose flip at `position` (0-based) is Heads.
/// Throws InvalidArgument on empty input and PositionOutOfRange (carrying
/// the replicate indices) when any sequence is too short.
double heads_proportion(std::span<const FlipSequence> seqs, std::size_t position);

struct HeadsCountHistogram {
    int k = 0;
    std::uint64_t windows = 0;
    std::vector<std::uint64_t> counts; // [k+1]
    std::vector<double> mass;          // [k+1]
    double mean = 0.0;
};

struct AlternationHistogram {
    int k = 0;
    std::uint64_t windows = 0;
    std::vector<std::uint64_t> counts; // [k]
    std::vector<double> mass;          // [k]
    double mean = 0.0;
};

struct RunLengthStats {
    int window_length = 0;
    std::uint64_t window_count = 0;
    std::vector<std::uint64_t> counts; // [k+1], index L; [0] unused

    std::uint64_t count(int L) const
    {
        return L >= 1 && static_cast<std::size_t>(L) < counts.size() ? counts[static_cast<std::size_t>(L)] : 0;
    }
};

struct NGramTable {
    int n = 0;
    std::uint64_t total = 0;
    std::vector<std::uint64_t> counts; // [2^n]; index reads the tuple with its first flip as MSB
    std::vector<double> fractions;

    /// Bit-string key, e.g. index 3 at n=3 -> "011" (T, H, H).
    static std::string key(int n, std::size_t index);
};

struct CorrelationVector {
    int target = 0;                            // 1-based
    std::vector<std::optional<double>> entries; // entries[i-1] = phi(i, target); nullopt = undefined
};

struct CorrelationMatrix {
    int k = 0;
    std::vector<std::optional<double>> phi; // row-major k x k, 1-based positions map to index-1

    const std::optional<double>& at(int i, int j) const
    {
        return phi[static_cast<std::size_t>((i - 1) * k + (j - 1))];
    }
};

// Rows: prompt variant (0 = heads-first prompt, 1 = tails-first prompt).
// Columns: first flip of the response (0 = Heads, 1 = Tails).
struct ContingencyTable2x2 {
    std::array<std::array<std::uint64_t, 2>, 2> counts{};
};

struct PrimacyResult {
    ContingencyTable2x2 table;
    std::array<std::array<double, 2>, 2> expected{};
    double chi_square = 0.0;
    bool significant = false;  // chi_square > 3.841 (alpha 0.05, 1 dof)
    bool low_expected = false; // some expected cell count < 5
};

inline constexpr double kChiSquareCritical1Dof = 3.841;

// ---- window tallies -------------------------------------------------------

/// Packs and tallies windows. All windows must share one length (<= 64);
/// throws InvalidArgument on empty input, MixedLengthError otherwise.
kernels::WindowTally tally_windows(std::span<const Window> windows, std::vector<int> ngram_orders = {},
                                   bool pair_counts = false);

/// Tallies the first `prefix` flips of every window.
kernels::WindowTally tally_prefixes(std::span<const Window> windows, std::size_t prefix);

HeadsCountHistogram heads_count_histogram(const kernels::WindowTally& tally);
AlternationHistogram alternation_histogram(const kernels::WindowTally& tally);
RunLengthStats run_length_stats(const kernels::WindowTally& tally);
NGramTable ngram_table(const kernels::WindowTally& tally, int n);
CorrelationVector positional_correlation(const kernels::WindowTally& tally, int target);
CorrelationMatrix correlation_matrix(const kernels::WindowTally& tally);

// ---- battery over windows -------------------------------------------------

HeadsCountHistogram heads_count_histogram(std::span<const Window> windows);

/// Throws InvalidArgument when windows are shorter than 2.
AlternationHistogram alternation_histogram(std::span<const Window> windows);

std::map<int, std::uint64_t> count_maximal_runs(std::span<const Flip> flips);
inline std::map<int, std::uint64_t> count_maximal_runs(const Window& w) { return count_maximal_runs(w.flips); }

RunLengthStats run_length_stats(std::span<const Window> windows);

/// Realized over expected run counts for L = 2..k, where expected is the
/// per-window baseline expectation times the window count.
std::map<int, double> run_ratio(const RunLengthStats& stats, const BaselineTable& baseline);

/// Overlapping n-grams counted within each window, never across window
/// boundaries. Requires 1 <= n <= window length.
NGramTable ngram_fractions(std::span<const Window> windows, int n);

/// Alternative mode: n-grams counted across each whole sequence.
NGramTable ngram_fractions(std::span<const FlipSequence> seqs, int n);

/// Phi coefficient of every position with `target` (1-based). Zero-variance
/// columns yield nullopt. Requires at least 2 windows.
CorrelationVector positional_correlation(std::span<const Window> windows, int target);

/// Phi for one pair of binary columns given joint counts.
std::optional<double> phi_coefficient(std::uint64_t n, std::uint64_t ones_a, std::uint64_t ones_b,
                                      std::uint64_t ones_both);

// ---- prompt order ---------------------------------------------------------

/// Pearson chi-square (no continuity correction) on a 2x2 table. Throws
/// InsufficientData when a row is empty.
PrimacyResult chi_square_2x2(const ContingencyTable2x2& table);

/// First-flip outcome by prompt variant, counting only Parsed records.
PrimacyResult primacy_table(std::span<const CollectionRecord> heads_first_prompt,
                            std::span<const CollectionRecord> tails_first_prompt);

} // namespace flipbench
