#include "catch_amalgamated.hpp"

#include "flipbench/baselines.hpp"
#include "flipbench/error.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace flipbench;

namespace {

struct Enumerated {
    std::vector<double> heads, alternation, runs;
    std::map<int, std::vector<double>> ngrams;
};

// Walks every window of length k as a vector of 0/1 flips.
Enumerated enumerate(int k)
{
    const auto K = static_cast<std::size_t>(k);
    Enumerated e;
    e.heads.assign(K + 1, 0.0);
    e.alternation.assign(K, 0.0);
    e.runs.assign(K + 1, 0.0);
    const double total = std::ldexp(1.0, k);
    std::map<int, double> ngram_totals;
    for (std::uint64_t w = 0; w < (std::uint64_t{1} << k); ++w) {
        std::vector<int> f(K);
        for (std::size_t i = 0; i < K; ++i) f[i] = static_cast<int>((w >> i) & 1U);
        int h = 0, a = 0;
        for (std::size_t i = 0; i < K; ++i) h += f[i];
        for (std::size_t i = 0; i + 1 < K; ++i) a += f[i] != f[i + 1];
        e.heads[static_cast<std::size_t>(h)] += 1.0 / total;
        e.alternation[static_cast<std::size_t>(a)] += 1.0 / total;
        std::size_t len = 1;
        for (std::size_t i = 1; i <= K; ++i) {
            if (i < K && f[i] == f[i - 1]) {
                ++len;
            } else {
                e.runs[len] += 1.0 / total;
                len = 1;
            }
        }
        for (int n = 1; n <= std::min(k, 6); ++n) {
            auto& v = e.ngrams[n];
            v.resize(std::size_t{1} << n, 0.0);
            for (std::size_t p = 0; p + static_cast<std::size_t>(n) <= K; ++p) {
                std::size_t key = 0;
                for (int j = 0; j < n; ++j) key = (key << 1) | static_cast<std::size_t>(f[p + static_cast<std::size_t>(j)]);
                v[key] += 1.0;
                ngram_totals[n] += 1.0;
            }
        }
    }
    for (auto& [n, v] : e.ngrams)
        for (double& x : v) x /= ngram_totals[n];
    return e;
}

double choose(int n, int r)
{
    double c = 1.0;
    for (int i = 1; i <= r; ++i) c = c * (n - r + i) / i;
    return c;
}

} // namespace

TEST_CASE("exact baseline equals brute-force enumeration", "[baselines]")
{
    for (int k : {1, 2, 3, 5, 7, 8, 10}) {
        INFO("k = " << k);
        const auto b = exact_baseline(k);
        const auto e = enumerate(k);
        CHECK(b.exact);
        CHECK(b.samples == (std::uint64_t{1} << k));
        for (std::size_t i = 0; i < e.heads.size(); ++i) CHECK(b.heads_pmf[i] == Catch::Approx(e.heads[i]).margin(1e-15));
        for (std::size_t i = 0; i < e.alternation.size(); ++i)
            CHECK(b.alternation_pmf[i] == Catch::Approx(e.alternation[i]).margin(1e-15));
        for (std::size_t L = 1; L < e.runs.size(); ++L)
            CHECK(b.expected_runs[L] == Catch::Approx(e.runs[L]).margin(1e-14));
        for (const auto& [n, v] : e.ngrams) {
            REQUIRE(b.ngram_fractions.count(n));
            for (std::size_t i = 0; i < v.size(); ++i)
                CHECK(b.ngram_fractions.at(n)[i] == Catch::Approx(v[i]).margin(1e-15));
        }
    }
}

TEST_CASE("exact baseline closed forms", "[baselines]")
{
    const auto b = exact_baseline(8);
    for (int x = 0; x <= 8; ++x) CHECK(b.heads_pmf[static_cast<std::size_t>(x)] == choose(8, x) / 256.0);
    for (int a = 0; a <= 7; ++a) CHECK(b.alternation_pmf[static_cast<std::size_t>(a)] == choose(7, a) / 128.0);
    CHECK(b.alternation_mean == 3.5);
    CHECK(b.heads_mean() == 4.0);
    CHECK(b.mse_floor == 0.25);
    for (const auto& [n, v] : b.ngram_fractions)
        for (double f : v) CHECK(f == std::ldexp(1.0, -n));

    const auto r = exact_baseline(7);
    for (int L = 2; L <= 6; ++L) CHECK(r.expected_runs[static_cast<std::size_t>(L)] == (7 - L + 3) / std::ldexp(1.0, L + 1));
    CHECK(r.expected_runs[7] == std::ldexp(1.0, -6));
    CHECK(r.expected_runs[2] == 1.0);
}

TEST_CASE("exact baseline range", "[baselines]")
{
    CHECK_THROWS_AS(exact_baseline(0), InvalidArgument);
    CHECK_THROWS_AS(exact_baseline(kMaxExactWindow + 1), InvalidArgument);
    CHECK_NOTHROW(exact_baseline(16));
}

TEST_CASE("monte carlo baseline agrees with enumeration within its errors", "[baselines]")
{
    const auto exact = exact_baseline(8);
    const auto mc = monte_carlo_baseline(8, 200000, 3);
    CHECK_FALSE(mc.exact);
    CHECK(mc.samples == 200000);
    CHECK(std::abs(mc.alternation_mean - exact.alternation_mean) < 5 * mc.alternation_mean_se);
    for (std::size_t x = 0; x <= 8; ++x)
        CHECK(std::abs(mc.heads_pmf[x] - exact.heads_pmf[x]) < 5 * mc.heads_pmf_se[x] + 1e-12);
    for (std::size_t L = 1; L <= 8; ++L)
        CHECK(std::abs(mc.expected_runs[L] - exact.expected_runs[L]) < 5 * mc.expected_runs_se[L] + 1e-12);

    // Same seed, same table; the key reproducibility promise.
    const auto again = monte_carlo_baseline(8, 200000, 3);
    CHECK(again.heads_pmf == mc.heads_pmf);
    CHECK(again.tally == mc.tally);

    CHECK_THROWS_AS(monte_carlo_baseline(8, 10, 1), InvalidArgument);
}

TEST_CASE("monte carlo baseline reaches past the enumeration limit", "[baselines]")
{
    const auto b = monte_carlo_baseline(40, 20000, 1);
    CHECK(b.k == 40);
    CHECK(std::abs(b.alternation_mean - 19.5) < 5 * b.alternation_mean_se);
}

TEST_CASE("biased monte carlo baseline lowers the mse floor", "[baselines]")
{
    const auto b = monte_carlo_baseline(8, 50000, 2, 0.7);
    CHECK(b.mse_floor == Catch::Approx(0.21));
    CHECK(std::abs(b.heads_mean() - 5.6) < 0.05);
}

TEST_CASE("human registry ships cited defaults", "[baselines][human]")
{
    const HumanBaselineRegistry reg;
    CHECK(reg.value(HumanBaselineRegistry::kAlternationRate) == 0.6);
    CHECK(reg.value(HumanBaselineRegistry::kFirstFlipHeadsRate) == 0.8);
    CHECK(reg.value(HumanBaselineRegistry::kHeadsFirstGivenHeadsFirstPrompt) == 0.87);
    CHECK(reg.value(HumanBaselineRegistry::kTailsFirstGivenTailsFirstPrompt) == 0.67);
    CHECK(reg.value(HumanBaselineRegistry::kHumanMseFloor) == 0.24);
    for (const auto& [key, c] : reg.entries()) CHECK_FALSE(c.citation.empty());
    CHECK_THROWS_AS(reg.at("nope"), InvalidArgument);
}

TEST_CASE("human registry overrides are checked", "[baselines][human]")
{
    HumanBaselineRegistry reg;
    reg.apply_overrides(nlohmann::json::parse(R"({"human_baselines": {"alternation_rate": {"value": 0.58, "citation": "lab study"}}})"));
    CHECK(reg.value(HumanBaselineRegistry::kAlternationRate) == 0.58);
    CHECK(reg.at(HumanBaselineRegistry::kAlternationRate).citation == "lab study");

    CHECK_THROWS_AS(reg.apply_overrides(nlohmann::json::parse(R"({"bogus": {"value": 0.5, "citation": "x"}})")), DataError);
    CHECK_THROWS_AS(reg.apply_overrides(nlohmann::json::parse(R"({"alternation_rate": {"value": 0.5, "citation": ""}})")),
                    DataError);
    CHECK_THROWS_AS(reg.apply_overrides(nlohmann::json::parse(R"({"alternation_rate": {"value": 1.5, "citation": "x"}})")),
                    DataError);
    CHECK_THROWS_AS(reg.apply_overrides(nlohmann::json::parse(R"({"human_mse_floor": {"value": 0.3, "citation": "x"}})")),
                    DataError);
}

TEST_CASE("human registry loads from a file", "[baselines][human]")
{
    const auto path = std::filesystem::temp_directory_path() / "flipbench_human_test.json";
    {
        std::ofstream out(path);
        out << R"({"first_flip_heads_rate": {"value": 0.75, "citation": "replication"}})";
    }
    const auto reg = load_human_baselines(path);
    CHECK(reg.value(HumanBaselineRegistry::kFirstFlipHeadsRate) == 0.75);
    CHECK(reg.value(HumanBaselineRegistry::kAlternationRate) == 0.6);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(load_human_baselines(std::filesystem::path("/nonexistent/human.json")), DataError);
    CHECK(load_human_baselines().value(HumanBaselineRegistry::kHumanMseFloor) == 0.24);
}
