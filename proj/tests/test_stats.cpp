#include "catch_amalgamated.hpp"

#include "flipbench/baselines.hpp"
#include "flipbench/error.hpp"
#include "flipbench/generators.hpp"
#include "flipbench/stats.hpp"

#include <cmath>

using namespace flipbench;

namespace {

FlipSequence seq(std::string_view compact, int replicate = 0)
{
    FlipSequence s;
    s.flips = from_compact(compact);
    s.meta.replicate = replicate;
    return s;
}

std::vector<Window> wins(std::initializer_list<std::string_view> compacts)
{
    std::vector<Window> out;
    std::size_t parent = 0;
    for (auto c : compacts) out.push_back({from_compact(c), 0, parent++});
    return out;
}

std::vector<Window> random_windows(std::size_t n, std::size_t k, std::uint64_t seed)
{
    GeneratorSpec spec;
    spec.length = k;
    spec.count = n;
    spec.seed = seed;
    return windows(generate(spec), k);
}

// Pearson correlation computed directly from two 0/1 columns.
double pearson(const std::vector<double>& a, const std::vector<double>& b)
{
    const auto n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

CollectionRecord rec(std::string_view flips, RecordKind kind = RecordKind::Parsed)
{
    CollectionRecord r;
    r.kind = kind;
    r.flips = from_compact(flips);
    return r;
}

} // namespace

TEST_CASE("heads proportion at a position", "[stats]")
{
    std::vector<FlipSequence> s{seq("HT"), seq("HH"), seq("TH"), seq("HT")};
    CHECK(heads_proportion(s, 0) == 0.75);
    CHECK(heads_proportion(s, 1) == 0.5);

    CHECK_THROWS_AS(heads_proportion(std::span<const FlipSequence>{}, 0), InvalidArgument);

    std::vector<FlipSequence> ragged{seq("HTH", 0), seq("H", 1), seq("HT", 2), seq("T", 3)};
    try {
        heads_proportion(ragged, 1);
        FAIL("expected PositionOutOfRange");
    } catch (const PositionOutOfRange& e) {
        CHECK(e.replicates() == std::vector<int>{1, 3});
    }
}

TEST_CASE("table-1 style proportions are exact count ratios", "[stats]")
{
    std::vector<FlipSequence> s;
    for (int i = 0; i < 21; ++i) s.push_back(seq(i < 16 ? "H" : "T", i));
    CHECK(heads_proportion(s, 0) == 16.0 / 21.0);
    CHECK(std::round(heads_proportion(s, 0) * 1000) / 1000 == 0.762);
}

TEST_CASE("heads-count and alternation histograms", "[stats]")
{
    const auto w = wins({"HTHTHTHT", "HHHHHHHH", "HHHHTTTT"});
    const auto h = heads_count_histogram(w);
    CHECK(h.counts[4] == 2);
    CHECK(h.counts[8] == 1);
    CHECK(h.mean == Catch::Approx(16.0 / 3.0));

    const auto a = alternation_histogram(w);
    CHECK(a.counts[7] == 1);
    CHECK(a.counts[0] == 1);
    CHECK(a.counts[1] == 1);
    CHECK(a.mean == Catch::Approx(8.0 / 3.0));

    CHECK_THROWS_AS(alternation_histogram(wins({"H", "T"})), InvalidArgument);
    CHECK_THROWS_AS(heads_count_histogram(wins({"HT", "HTH"})), MixedLengthError);
    CHECK_THROWS_AS(heads_count_histogram(std::span<const Window>{}), InvalidArgument);
}

TEST_CASE("maximal runs", "[stats]")
{
    const auto runs = count_maximal_runs(from_compact("HHTHHHTT"));
    CHECK(runs.at(1) == 1);
    CHECK(runs.at(2) == 2);
    CHECK(runs.at(3) == 1);
    CHECK(count_maximal_runs(from_compact("TTTTTTT")).at(7) == 1);
    CHECK(count_maximal_runs(std::vector<Flip>{}).empty());
}

TEST_CASE("run structure invariants hold on random windows", "[stats][property]")
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        for (const auto& w : random_windows(50, 8, seed)) {
            const auto runs = count_maximal_runs(w);
            std::uint64_t total_runs = 0, covered = 0;
            for (const auto& [L, n] : runs) {
                total_runs += n;
                covered += static_cast<std::uint64_t>(L) * n;
            }
            CHECK(covered == 8);
            std::uint64_t alternations = 0;
            for (std::size_t i = 1; i < w.size(); ++i) alternations += w.flips[i] != w.flips[i - 1];
            CHECK(alternations == total_runs - 1);
        }
    }
}

TEST_CASE("complementing every flip mirrors the heads histogram", "[stats][property]")
{
    auto w = random_windows(300, 8, 4);
    const auto before = heads_count_histogram(w);
    const auto alt_before = alternation_histogram(w);
    for (auto& x : w)
        for (auto& f : x.flips) f = complement(f);
    const auto after = heads_count_histogram(w);
    for (std::size_t i = 0; i <= 8; ++i) CHECK(after.counts[i] == before.counts[8 - i]);
    CHECK(alternation_histogram(w).counts == alt_before.counts);
}

TEST_CASE("run ratio against the baseline", "[stats]")
{
    const auto base = exact_baseline(7);
    const auto alternating = wins({"HTHTHTH", "THTHTHT"});
    const auto ratios = run_ratio(run_length_stats(alternating), base);
    for (int L = 2; L <= 7; ++L) CHECK(ratios.at(L) == 0.0);

    // Enumerating all windows reproduces the expectation exactly.
    std::vector<Window> all;
    for (std::uint64_t code = 0; code < 128; ++code) {
        std::vector<Flip> f(7);
        for (std::size_t i = 0; i < 7; ++i) f[i] = ((code >> i) & 1U) ? Flip::Heads : Flip::Tails;
        all.push_back({f, 0, code});
    }
    for (const auto& [L, r] : run_ratio(run_length_stats(all), base)) CHECK(r == Catch::Approx(1.0).epsilon(1e-14));

    CHECK_THROWS_AS(run_ratio(run_length_stats(alternating), exact_baseline(8)), InvalidArgument);
}

TEST_CASE("n-grams stay inside windows", "[stats]")
{
    // "HHT" and "THH" share no 3-gram across the window boundary.
    const auto t = ngram_fractions(wins({"HHT", "THH"}), 2);
    CHECK(t.total == 4);
    CHECK(t.counts[0b11] == 2);
    CHECK(t.counts[0b10] == 1);
    CHECK(t.counts[0b01] == 1);
    CHECK(t.counts[0b00] == 0);
    CHECK(NGramTable::key(3, 3) == "011");
    CHECK(NGramTable::key(2, 2) == "10");

    const auto t3 = ngram_fractions(wins({"HTH", "HTH"}), 3);
    CHECK(t3.fractions[0b101] == 1.0);
    CHECK_THROWS_AS(ngram_fractions(wins({"HT"}), 3), InvalidArgument);
}

TEST_CASE("whole-sequence n-grams", "[stats]")
{
    std::vector<FlipSequence> s{seq("HHTT")};
    const auto t = ngram_fractions(std::span<const FlipSequence>(s), 2);
    CHECK(t.total == 3);
    CHECK(t.counts[0b11] == 1);
    CHECK(t.counts[0b10] == 1);
    CHECK(t.counts[0b00] == 1);
}

TEST_CASE("phi coefficient equals Pearson correlation of the columns", "[stats][property]")
{
    const auto w = random_windows(400, 8, 21);
    const auto tally = tally_windows(w, {}, true);
    const auto m = correlation_matrix(tally);
    for (int i = 1; i <= 8; ++i) {
        for (int j = 1; j <= 8; ++j) {
            std::vector<double> a, b;
            for (const auto& x : w) {
                a.push_back(x.flips[static_cast<std::size_t>(i - 1)] == Flip::Heads);
                b.push_back(x.flips[static_cast<std::size_t>(j - 1)] == Flip::Heads);
            }
            REQUIRE(m.at(i, j).has_value());
            CHECK(*m.at(i, j) == Catch::Approx(pearson(a, b)).margin(1e-12));
            CHECK(*m.at(i, j) == Catch::Approx(*m.at(j, i)).margin(1e-15));
        }
        CHECK(*m.at(i, i) == 1.0);
    }
    const auto v = positional_correlation(w, 8);
    for (int i = 1; i <= 8; ++i) CHECK(v.entries[static_cast<std::size_t>(i - 1)] == m.at(i, 8));
}

TEST_CASE("zero-variance columns are undefined, not zero", "[stats]")
{
    const auto v = positional_correlation(wins({"HTH", "HHH", "HTT"}), 3);
    CHECK_FALSE(v.entries[0].has_value()); // first flip always heads
    REQUIRE(v.entries[1].has_value());
    CHECK(*v.entries[2] == 1.0);

    const auto alt = positional_correlation(wins({"HTHTHTHT", "THTHTHTH"}), 8);
    CHECK(*alt.entries[6] == -1.0);
    CHECK(*alt.entries[5] == 1.0);

    CHECK_THROWS_AS(positional_correlation(wins({"HT"}), 2), InsufficientData);
    CHECK_THROWS_AS(positional_correlation(wins({"HT", "TH"}), 3), InvalidArgument);
    CHECK_FALSE(phi_coefficient(10, 0, 5, 0).has_value());
    CHECK_FALSE(phi_coefficient(10, 5, 10, 5).has_value());
}

TEST_CASE("chi-square on a 2x2 table", "[stats]")
{
    // Hand computation: rows 16/5 and 11/11, total 43.
    ContingencyTable2x2 t;
    t.counts = {{{16, 5}, {11, 11}}};
    const auto r = chi_square_2x2(t);
    const double e00 = 21.0 * 27 / 43, e01 = 21.0 * 16 / 43, e10 = 22.0 * 27 / 43, e11 = 22.0 * 16 / 43;
    const double expected = (16 - e00) * (16 - e00) / e00 + (5 - e01) * (5 - e01) / e01 +
                            (11 - e10) * (11 - e10) / e10 + (11 - e11) * (11 - e11) / e11;
    CHECK(r.chi_square == Catch::Approx(expected).epsilon(1e-12));
    CHECK(r.significant == (expected > 3.841));
    CHECK_FALSE(r.low_expected);

    ContingencyTable2x2 strong;
    strong.counts = {{{40, 10}, {10, 40}}};
    CHECK(chi_square_2x2(strong).chi_square == Catch::Approx(36.0));
    CHECK(chi_square_2x2(strong).significant);

    ContingencyTable2x2 small;
    small.counts = {{{3, 1}, {1, 3}}};
    CHECK(chi_square_2x2(small).low_expected);

    ContingencyTable2x2 empty_row;
    empty_row.counts = {{{0, 0}, {4, 4}}};
    CHECK_THROWS_AS(chi_square_2x2(empty_row), InsufficientData);
}

TEST_CASE("primacy table counts parsed first flips only", "[stats]")
{
    std::vector<CollectionRecord> heads_first{rec("HT"), rec("HH"), rec("TH"), rec("", RecordKind::Refusal),
                                              rec("H", RecordKind::Partial)};
    std::vector<CollectionRecord> tails_first{rec("TT"), rec("HT")};
    const auto r = primacy_table(heads_first, tails_first);
    CHECK(r.table.counts[0][0] == 2);
    CHECK(r.table.counts[0][1] == 1);
    CHECK(r.table.counts[1][0] == 1);
    CHECK(r.table.counts[1][1] == 1);
}
