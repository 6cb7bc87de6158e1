#include "catch_amalgamated.hpp"

#include "flipbench/error.hpp"
#include "flipbench/generators.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cmath>

using namespace flipbench;

TEST_CASE("xorshift64* follows its published recurrence", "[generators]")
{
    // Recompute the first outputs by hand from the documented definition.
    std::uint64_t z = 42 + 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    std::uint64_t state = z ^ (z >> 31);

    Xorshift64Star rng(42);
    for (int i = 0; i < 100; ++i) {
        state ^= state >> 12;
        state ^= state << 25;
        state ^= state >> 27;
        REQUIRE(rng() == state * 0x2545F4914F6CDD1DULL);
    }
}

TEST_CASE("uniform draws cover [0, 1) evenly", "[generators]")
{
    Xorshift64Star rng(1);
    std::vector<int> bins(10, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        ++bins[static_cast<std::size_t>(u * 10)];
    }
    for (int b : bins) CHECK(std::abs(b - n / 10) < 5 * std::sqrt(n * 0.1 * 0.9));
}

TEST_CASE("generation is a pure function of the generator settings", "[generators]")
{
    GeneratorSpec spec;
    spec.count = 200;
    spec.seed = 11;
    const auto a = generate(spec);
    const auto b = generate(spec);
    CHECK(a == b);

#ifdef _OPENMP
    const int saved = omp_get_max_threads();
    omp_set_num_threads(3);
    CHECK(generate(spec) == a);
    omp_set_num_threads(saved);
#endif

    spec.seed = 12;
    CHECK_FALSE(generate(spec) == a);

    // Replicate i does not depend on how many replicates were requested.
    GeneratorSpec fewer = spec;
    fewer.count = 5;
    const auto full = generate(spec);
    const auto part = generate(fewer);
    for (std::size_t i = 0; i < part.size(); ++i) CHECK(part[i] == full[i]);
}

TEST_CASE("provenance names the generator", "[generators]")
{
    GeneratorSpec spec;
    spec.kind = GeneratorKind::MarkovAlternation;
    spec.count = 3;
    const auto seqs = generate(spec);
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        CHECK(seqs[i].meta.model == "synthetic:markov-alternation");
        CHECK(seqs[i].meta.replicate == static_cast<int>(i));
        CHECK(seqs[i].size() == 20);
    }
}

TEST_CASE("bernoulli heads rate matches p", "[generators]")
{
    for (double p : {0.0, 0.2, 0.5, 0.9, 1.0}) {
        GeneratorSpec spec;
        spec.p_heads = p;
        spec.count = 2000;
        spec.length = 25;
        spec.seed = 5;
        std::size_t heads = 0, total = 0;
        for (const auto& s : generate(spec))
            for (Flip f : s.flips) {
                heads += f == Flip::Heads;
                ++total;
            }
        const double rate = static_cast<double>(heads) / static_cast<double>(total);
        CHECK(std::abs(rate - p) <= 5 * std::sqrt(p * (1 - p) / static_cast<double>(total)) + 1e-12);
    }
}

TEST_CASE("markov alternation rate matches p_alternate", "[generators]")
{
    GeneratorSpec spec;
    spec.kind = GeneratorKind::MarkovAlternation;
    spec.p_alternate = 0.6;
    spec.p_first_heads = 0.8;
    spec.count = 4000;
    spec.length = 20;
    spec.seed = 9;
    std::size_t alts = 0, pairs = 0, first_heads = 0;
    for (const auto& s : generate(spec)) {
        first_heads += s.flips.front() == Flip::Heads;
        for (std::size_t i = 1; i < s.size(); ++i) {
            alts += s.flips[i] != s.flips[i - 1];
            ++pairs;
        }
    }
    const double rate = static_cast<double>(alts) / static_cast<double>(pairs);
    CHECK(std::abs(rate - 0.6) < 5 * std::sqrt(0.24 / static_cast<double>(pairs)));
    const double first = static_cast<double>(first_heads) / 4000.0;
    CHECK(std::abs(first - 0.8) < 5 * std::sqrt(0.16 / 4000.0));
}

TEST_CASE("fixed pattern repeats cyclically", "[generators]")
{
    GeneratorSpec spec;
    spec.kind = GeneratorKind::FixedPattern;
    spec.pattern = from_compact("HHT");
    spec.length = 8;
    spec.count = 2;
    for (const auto& s : generate(spec)) CHECK(to_compact(s.flips) == "HHTHHTHH");
}

TEST_CASE("generator specs are validated", "[generators]")
{
    GeneratorSpec bad;
    bad.p_heads = 1.5;
    CHECK_THROWS_AS(generate(bad), InvalidArgument);
    bad = {};
    bad.length = 0;
    CHECK_THROWS_AS(generate(bad), InvalidArgument);
    bad = {};
    bad.kind = GeneratorKind::FixedPattern;
    CHECK_THROWS_AS(generate(bad), InvalidArgument);
    bad = {};
    bad.kind = GeneratorKind::MarkovAlternation;
    bad.p_alternate = -0.1;
    CHECK_THROWS_AS(generate(bad), InvalidArgument);
    CHECK_THROWS_AS(generator_kind_from_string("gaussian"), InvalidArgument);
    CHECK(generator_kind_from_string("markov") == GeneratorKind::MarkovAlternation);
}
