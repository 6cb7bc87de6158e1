#pragma once

// Integer counting kernels shared by the statistics battery and the
// enumeration baselines. A window of length k is packed into a 64-bit code
// (bit i = flip i, Heads = 1). Every statistic the battery reports is a
// ratio of the exact counts accumulated here, so the parallel kernels must
// produce tallies identical to the serial reference under any partitioning.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace flipbench::kernels {

struct TallyOptions {
    int k = 8;
    std::vector<int> ngram_orders;
    // Per-position and pairwise heads counts for phi coefficients. Costs
    // O(k^2) per window, so the enumeration baselines leave it off.
    bool pair_counts = false;
};

struct WindowTally {
    int k = 0;
    std::vector<int> ngram_orders;
    bool has_pairs = false;
    std::uint64_t windows = 0;

    std::vector<std::uint64_t> heads;        // [k+1]: windows with x heads
    std::vector<std::uint64_t> alternations; // [k]:   windows with a alternations
    std::vector<std::uint64_t> runs;         // [k+1]: maximal runs of length L, pooled
    std::vector<std::uint64_t> runs_sq;      // [k+1]: sum over windows of (runs of length L)^2
    std::vector<std::vector<std::uint64_t>> ngrams;    // per order: [2^n], first flip is the MSB
    std::vector<std::vector<std::uint64_t>> ngrams_sq; // per order: sum of per-window count^2
    std::vector<std::uint64_t> ones;      // [k]:   windows with heads at position i
    std::vector<std::uint64_t> pair_ones; // [k*k]: windows with heads at both i and j

    void merge(const WindowTally& other);
    bool operator==(const WindowTally&) const = default;

    // Index of order n within ngram_orders, or -1.
    int ngram_slot(int n) const noexcept;
};

WindowTally make_tally(const TallyOptions& options);

// Adds one packed window to the tally.
void tally_code(WindowTally& tally, std::uint64_t code);

namespace serial {
WindowTally tally_codes(std::span<const std::uint64_t> codes, const TallyOptions& options);
WindowTally tally_all(const TallyOptions& options);
} // namespace serial

namespace omp {
WindowTally tally_codes(std::span<const std::uint64_t> codes, const TallyOptions& options);
WindowTally tally_all(const TallyOptions& options);
} // namespace omp

// Preferred entry points; route to the OpenMP kernels when built with them.
WindowTally tally_codes(std::span<const std::uint64_t> codes, const TallyOptions& options);

// Tallies every one of the 2^k codes. Requires k <= 24.
WindowTally tally_all(const TallyOptions& options);

// Number of worker threads the OpenMP kernels will use (1 without OpenMP).
int max_threads() noexcept;

} // namespace flipbench::kernels
