#include "flipbench/stats.hpp"

#include "flipbench/error.hpp"

#include <algorithm>
#include <cmath>

namespace flipbench {

double heads_proportion(std::span<const FlipSequence> seqs, std::size_t position)
{
    if (seqs.empty()) throw InvalidArgument("heads_proportion: empty input");
    std::vector<int> offenders;
    std::size_t heads = 0;
    for (const auto& s : seqs) {
        if (s.size() <= position) {
            offenders.push_back(s.meta.replicate);
            continue;
        }
        if (s.flips[position] == Flip::Heads) ++heads;
    }
    if (!offenders.empty()) {
        std::string list;
        for (std::size_t i = 0; i < offenders.size(); ++i) {
            if (i) list += ", ";
            list += std::to_string(offenders[i]);
        }
        throw PositionOutOfRange("heads_proportion: position " + std::to_string(position) +
                                     " out of range for replicates [" + list + "]",
                                 std::move(offenders));
    }
    return static_cast<double>(heads) / static_cast<double>(seqs.size());
}

namespace {

std::size_t common_length(std::span<const Window> windows)
{
    if (windows.empty()) throw InvalidArgument("no windows supplied");
    const std::size_t k = windows.front().size();
    for (const auto& w : windows) {
        if (w.size() != k)
            throw MixedLengthError("windows of mixed length (" + std::to_string(k) + " and " +
                                   std::to_string(w.size()) + ")");
    }
    if (k == 0) throw InvalidArgument("windows must be non-empty");
    return k;
}

} // namespace

kernels::WindowTally tally_windows(std::span<const Window> windows, std::vector<int> ngram_orders, bool pair_counts)
{
    const std::size_t k = common_length(windows);
    std::vector<std::uint64_t> codes(windows.size());
    std::transform(windows.begin(), windows.end(), codes.begin(), [](const Window& w) { return pack(w.flips); });
    return kernels::tally_codes(codes, {static_cast<int>(k), std::move(ngram_orders), pair_counts});
}

kernels::WindowTally tally_prefixes(std::span<const Window> windows, std::size_t prefix)
{
    const std::size_t k = common_length(windows);
    if (prefix < 1 || prefix > k)
        throw InvalidArgument("prefix length " + std::to_string(prefix) + " out of range for windows of length " +
                              std::to_string(k));
    std::vector<std::uint64_t> codes(windows.size());
    std::transform(windows.begin(), windows.end(), codes.begin(), [prefix](const Window& w) {
        return pack(std::span<const Flip>(w.flips).first(prefix));
    });
    return kernels::tally_codes(codes, {static_cast<int>(prefix), {}, false});
}

HeadsCountHistogram heads_count_histogram(const kernels::WindowTally& t)
{
    HeadsCountHistogram h;
    h.k = t.k;
    h.windows = t.windows;
    h.counts = t.heads;
    h.mass.resize(h.counts.size());
    const auto n = static_cast<double>(t.windows);
    std::uint64_t weighted = 0;
    for (std::size_t x = 0; x < h.counts.size(); ++x) {
        h.mass[x] = static_cast<double>(h.counts[x]) / n;
        weighted += x * h.counts[x];
    }
    h.mean = static_cast<double>(weighted) / n;
    return h;
}

AlternationHistogram alternation_histogram(const kernels::WindowTally& t)
{
    if (t.k < 2) throw InvalidArgument("alternation histogram requires windows of length >= 2");
    AlternationHistogram h;
    h.k = t.k;
    h.windows = t.windows;
    h.counts = t.alternations;
    h.mass.resize(h.counts.size());
    const auto n = static_cast<double>(t.windows);
    std::uint64_t weighted = 0;
    for (std::size_t a = 0; a < h.counts.size(); ++a) {
        h.mass[a] = static_cast<double>(h.counts[a]) / n;
        weighted += a * h.counts[a];
    }
    h.mean = static_cast<double>(weighted) / n;
    return h;
}

RunLengthStats run_length_stats(const kernels::WindowTally& t)
{
    return {t.k, t.windows, t.runs};
}

std::string NGramTable::key(int n, std::size_t index)
{
    std::string s(static_cast<std::size_t>(n), '0');
    for (int j = 0; j < n; ++j)
        if ((index >> (n - 1 - j)) & 1U) s[static_cast<std::size_t>(j)] = '1';
    return s;
}

NGramTable ngram_table(const kernels::WindowTally& t, int n)
{
    const int slot = t.ngram_slot(n);
    if (slot < 0) throw InvalidArgument("tally has no n-gram counts of order " + std::to_string(n));
    NGramTable table;
    table.n = n;
    table.counts = t.ngrams[static_cast<std::size_t>(slot)];
    for (auto c : table.counts) table.total += c;
    table.fractions.resize(table.counts.size());
    for (std::size_t i = 0; i < table.counts.size(); ++i)
        table.fractions[i] = static_cast<double>(table.counts[i]) / static_cast<double>(table.total);
    return table;
}

std::optional<double> phi_coefficient(std::uint64_t n, std::uint64_t ones_a, std::uint64_t ones_b,
                                      std::uint64_t ones_both)
{
    if (ones_a == 0 || ones_a == n || ones_b == 0 || ones_b == n) return std::nullopt;
    const auto N = static_cast<double>(n);
    const auto a = static_cast<double>(ones_a);
    const auto b = static_cast<double>(ones_b);
    const double num = N * static_cast<double>(ones_both) - a * b;
    const double va = a * (N - a);
    const double vb = b * (N - b);
    return std::clamp(num / std::sqrt(va * vb), -1.0, 1.0);
}

namespace {

std::optional<double> phi_at(const kernels::WindowTally& t, int i, int j)
{
    const auto k = static_cast<std::size_t>(t.k);
    const auto ii = static_cast<std::size_t>(i - 1);
    const auto jj = static_cast<std::size_t>(j - 1);
    if (i == j) {
        const auto ones = t.ones[ii];
        if (ones == 0 || ones == t.windows) return std::nullopt;
        return 1.0;
    }
    return phi_coefficient(t.windows, t.ones[ii], t.ones[jj], t.pair_ones[ii * k + jj]);
}

} // namespace

CorrelationVector positional_correlation(const kernels::WindowTally& t, int target)
{
    if (!t.has_pairs) throw InvalidArgument("tally was built without pair counts");
    if (target < 1 || target > t.k)
        throw InvalidArgument("target position " + std::to_string(target) + " outside 1.." + std::to_string(t.k));
    if (t.windows < 2) throw InsufficientData("positional correlation requires at least 2 windows");
    CorrelationVector v;
    v.target = target;
    for (int i = 1; i <= t.k; ++i) v.entries.push_back(phi_at(t, i, target));
    return v;
}

CorrelationMatrix correlation_matrix(const kernels::WindowTally& t)
{
    if (!t.has_pairs) throw InvalidArgument("tally was built without pair counts");
    if (t.windows < 2) throw InsufficientData("correlation matrix requires at least 2 windows");
    CorrelationMatrix m;
    m.k = t.k;
    for (int i = 1; i <= t.k; ++i)
        for (int j = 1; j <= t.k; ++j) m.phi.push_back(phi_at(t, i, j));
    return m;
}

HeadsCountHistogram heads_count_histogram(std::span<const Window> windows)
{
    return heads_count_histogram(tally_windows(windows));
}

AlternationHistogram alternation_histogram(std::span<const Window> windows)
{
    return alternation_histogram(tally_windows(windows));
}

std::map<int, std::uint64_t> count_maximal_runs(std::span<const Flip> flips)
{
    std::map<int, std::uint64_t> runs;
    if (flips.empty()) return runs;
    int run = 1;
    for (std::size_t i = 1; i < flips.size(); ++i) {
        if (flips[i] == flips[i - 1]) {
            ++run;
        } else {
            ++runs[run];
            run = 1;
        }
    }
    ++runs[run];
    return runs;
}

RunLengthStats run_length_stats(std::span<const Window> windows)
{
    return run_length_stats(tally_windows(windows));
}

std::map<int, double> run_ratio(const RunLengthStats& stats, const BaselineTable& baseline)
{
    if (stats.window_length != baseline.k)
        throw InvalidArgument("run_ratio: window length " + std::to_string(stats.window_length) +
                              " does not match baseline length " + std::to_string(baseline.k));
    std::map<int, double> ratios;
    const auto windows = static_cast<double>(stats.window_count);
    for (int L = 2; L <= stats.window_length; ++L) {
        const double expected = baseline.expected_runs[static_cast<std::size_t>(L)] * windows;
        ratios[L] = static_cast<double>(stats.count(L)) / expected;
    }
    return ratios;
}

NGramTable ngram_fractions(std::span<const Window> windows, int n)
{
    const std::size_t k = common_length(windows);
    if (n < 1 || static_cast<std::size_t>(n) > k)
        throw InvalidArgument("n-gram order " + std::to_string(n) + " out of range for window length " +
                              std::to_string(k));
    return ngram_table(tally_windows(windows, {n}), n);
}

NGramTable ngram_fractions(std::span<const FlipSequence> seqs, int n)
{
    if (n < 1 || n > 20) throw InvalidArgument("n-gram order " + std::to_string(n) + " out of range");
    NGramTable table;
    table.n = n;
    table.counts.assign(std::size_t{1} << n, 0);
    for (const auto& s : seqs) {
        for (std::size_t start = 0; start + static_cast<std::size_t>(n) <= s.size(); ++start) {
            std::size_t key = 0;
            for (int j = 0; j < n; ++j)
                key = (key << 1) | static_cast<std::size_t>(s.flips[start + static_cast<std::size_t>(j)]);
            ++table.counts[key];
            ++table.total;
        }
    }
    if (table.total == 0) throw InvalidArgument("no sequence is long enough for n-grams of order " + std::to_string(n));
    table.fractions.resize(table.counts.size());
    for (std::size_t i = 0; i < table.counts.size(); ++i)
        table.fractions[i] = static_cast<double>(table.counts[i]) / static_cast<double>(table.total);
    return table;
}

CorrelationVector positional_correlation(std::span<const Window> windows, int target)
{
    if (windows.size() < 2) throw InsufficientData("positional correlation requires at least 2 windows");
    return positional_correlation(tally_windows(windows, {}, true), target);
}

PrimacyResult chi_square_2x2(const ContingencyTable2x2& table)
{
    PrimacyResult r;
    r.table = table;
    const auto& c = table.counts;
    const double row[2] = {static_cast<double>(c[0][0] + c[0][1]), static_cast<double>(c[1][0] + c[1][1])};
    const double col[2] = {static_cast<double>(c[0][0] + c[1][0]), static_cast<double>(c[0][1] + c[1][1])};
    if (row[0] == 0.0 || row[1] == 0.0)
        throw InsufficientData("primacy table: a prompt variant has no parsed responses");
    const double total = row[0] + row[1];
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const double e = row[i] * col[j] / total;
            r.expected[i][j] = e;
            if (e < 5.0) r.low_expected = true;
            if (e > 0.0) {
                const double d = static_cast<double>(c[i][j]) - e;
                r.chi_square += d * d / e;
            }
        }
    }
    r.significant = r.chi_square > kChiSquareCritical1Dof;
    return r;
}

PrimacyResult primacy_table(std::span<const CollectionRecord> heads_first_prompt,
                            std::span<const CollectionRecord> tails_first_prompt)
{
    ContingencyTable2x2 table;
    auto fill = [&](std::span<const CollectionRecord> records, std::size_t row) {
        for (const auto& r : records) {
            if (r.kind != RecordKind::Parsed || r.flips.empty()) continue;
            ++table.counts[row][r.flips.front() == Flip::Heads ? 0 : 1];
        }
    };
    fill(heads_first_prompt, 0);
    fill(tails_first_prompt, 1);
    return chi_square_2x2(table);
}

} // namespace flipbench
