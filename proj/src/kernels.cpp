#include "flipbench/kernels.hpp"

#include "flipbench/error.hpp"

#include <algorithm>
#include <bit>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace flipbench::kernels {

namespace {

constexpr int kMaxCodeLength = 64;
constexpr int kMaxEnumeration = 24;
constexpr int kMaxNgramOrder = 20;

void add_into(std::vector<std::uint64_t>& dst, const std::vector<std::uint64_t>& src)
{
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void validate(const TallyOptions& options)
{
    if (options.k < 1 || options.k > kMaxCodeLength)
        throw InvalidArgument("window length must be in 1..64, got " + std::to_string(options.k));
    for (int n : options.ngram_orders) {
        if (n < 1 || n > options.k || n > kMaxNgramOrder)
            throw InvalidArgument("n-gram order " + std::to_string(n) + " out of range for window length " +
                                  std::to_string(options.k));
    }
}

} // namespace

int WindowTally::ngram_slot(int n) const noexcept
{
    auto it = std::find(ngram_orders.begin(), ngram_orders.end(), n);
    return it == ngram_orders.end() ? -1 : static_cast<int>(it - ngram_orders.begin());
}

void WindowTally::merge(const WindowTally& other)
{
    windows += other.windows;
    add_into(heads, other.heads);
    add_into(alternations, other.alternations);
    add_into(runs, other.runs);
    add_into(runs_sq, other.runs_sq);
    for (std::size_t s = 0; s < ngrams.size(); ++s) {
        add_into(ngrams[s], other.ngrams[s]);
        add_into(ngrams_sq[s], other.ngrams_sq[s]);
    }
    add_into(ones, other.ones);
    add_into(pair_ones, other.pair_ones);
}

WindowTally make_tally(const TallyOptions& options)
{
    validate(options);
    const auto k = static_cast<std::size_t>(options.k);
    WindowTally t;
    t.k = options.k;
    t.ngram_orders = options.ngram_orders;
    t.has_pairs = options.pair_counts;
    t.heads.assign(k + 1, 0);
    t.alternations.assign(k, 0);
    t.runs.assign(k + 1, 0);
    t.runs_sq.assign(k + 1, 0);
    for (int n : options.ngram_orders) {
        t.ngrams.emplace_back(std::size_t{1} << n, 0);
        t.ngrams_sq.emplace_back(std::size_t{1} << n, 0);
    }
    t.ones.assign(k, 0);
    if (options.pair_counts) t.pair_ones.assign(k * k, 0);
    return t;
}

void tally_code(WindowTally& t, std::uint64_t code)
{
    const int k = t.k;
    const std::uint64_t mask = k == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << k) - 1;
    code &= mask;

    ++t.windows;
    ++t.heads[static_cast<std::size_t>(std::popcount(code))];

    const std::uint64_t pair_mask = mask >> 1;
    ++t.alternations[static_cast<std::size_t>(std::popcount((code ^ (code >> 1)) & pair_mask))];

    // Maximal runs. Per-window counts are kept on the stack to form squares.
    std::uint64_t local_runs[kMaxCodeLength + 1] = {};
    int run = 1;
    for (int i = 1; i < k; ++i) {
        if (((code >> i) & 1U) == ((code >> (i - 1)) & 1U)) {
            ++run;
        } else {
            ++local_runs[run];
            run = 1;
        }
    }
    ++local_runs[run];
    for (int L = 1; L <= k; ++L) {
        if (local_runs[L]) {
            t.runs[static_cast<std::size_t>(L)] += local_runs[L];
            t.runs_sq[static_cast<std::size_t>(L)] += local_runs[L] * local_runs[L];
        }
    }

    for (std::size_t s = 0; s < t.ngram_orders.size(); ++s) {
        const int n = t.ngram_orders[s];
        auto& counts = t.ngrams[s];
        auto& squares = t.ngrams_sq[s];
        // Per-window counts are sparse (at most k-n+1 distinct keys); track
        // them in a small list to form squares.
        std::uint32_t keys[kMaxCodeLength];
        std::uint32_t hits[kMaxCodeLength];
        int distinct = 0;
        for (int start = 0; start + n <= k; ++start) {
            std::uint32_t key = 0;
            for (int j = 0; j < n; ++j) key = (key << 1) | static_cast<std::uint32_t>((code >> (start + j)) & 1U);
            ++counts[key];
            int d = 0;
            while (d < distinct && keys[d] != key) ++d;
            if (d == distinct) {
                keys[d] = key;
                hits[d] = 0;
                ++distinct;
            }
            ++hits[d];
        }
        for (int d = 0; d < distinct; ++d) squares[keys[d]] += std::uint64_t{hits[d]} * hits[d];
    }

    for (int i = 0; i < k; ++i) {
        if ((code >> i) & 1U) ++t.ones[static_cast<std::size_t>(i)];
    }
    if (t.has_pairs) {
        for (int i = 0; i < k; ++i) {
            if (!((code >> i) & 1U)) continue;
            for (int j = 0; j < k; ++j)
                if ((code >> j) & 1U) ++t.pair_ones[static_cast<std::size_t>(i * k + j)];
        }
    }
}

namespace serial {

WindowTally tally_codes(std::span<const std::uint64_t> codes, const TallyOptions& options)
{
    WindowTally t = make_tally(options);
    for (std::uint64_t c : codes) tally_code(t, c);
    return t;
}

WindowTally tally_all(const TallyOptions& options)
{
    if (options.k < 1 || options.k > kMaxEnumeration)
        throw InvalidArgument("enumeration requires 1 <= k <= 24");
    WindowTally t = make_tally(options);
    const std::uint64_t total = std::uint64_t{1} << options.k;
    for (std::uint64_t c = 0; c < total; ++c) tally_code(t, c);
    return t;
}

} // namespace serial

namespace omp {

WindowTally tally_codes(std::span<const std::uint64_t> codes, const TallyOptions& options)
{
    WindowTally total = make_tally(options);
    const auto n = static_cast<std::int64_t>(codes.size());
#pragma omp parallel
    {
        WindowTally local = make_tally(options);
#pragma omp for schedule(static) nowait
        for (std::int64_t i = 0; i < n; ++i) tally_code(local, codes[static_cast<std::size_t>(i)]);
#pragma omp critical(flipbench_tally_merge)
        total.merge(local);
    }
    return total;
}

WindowTally tally_all(const TallyOptions& options)
{
    if (options.k < 1 || options.k > kMaxEnumeration)
        throw InvalidArgument("enumeration requires 1 <= k <= 24");
    WindowTally total = make_tally(options);
    const auto n = static_cast<std::int64_t>(std::uint64_t{1} << options.k);
#pragma omp parallel
    {
        WindowTally local = make_tally(options);
#pragma omp for schedule(static) nowait
        for (std::int64_t c = 0; c < n; ++c) tally_code(local, static_cast<std::uint64_t>(c));
#pragma omp critical(flipbench_tally_merge)
        total.merge(local);
    }
    return total;
}

} // namespace omp

WindowTally tally_codes(std::span<const std::uint64_t> codes, const TallyOptions& options)
{
#ifdef _OPENMP
    return omp::tally_codes(codes, options);
#else
    return serial::tally_codes(codes, options);
#endif
}

WindowTally tally_all(const TallyOptions& options)
{
#ifdef _OPENMP
    return omp::tally_all(options);
#else
    return serial::tally_all(options);
#endif
}

int max_threads() noexcept
{
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

} // namespace flipbench::kernels
