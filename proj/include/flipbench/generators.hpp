#pragma once

#include "flipbench/sequence.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace flipbench {

/// SplitMix64 finalizer. Used to turn user seeds into generator state and to
/// derive independent per-replicate seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seed for replicate `index` of a stream seeded with `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept
{
    return mix64(seed ^ mix64(index + 1));
}

/// xorshift64* (Marsaglia shifts 12/25/27, Vigna multiplier). The state is
/// mix64(seed), replaced by a fixed odd constant in the (unreachable in
/// practice) case that it is zero. Uniform doubles take the top 53 bits.
///
/// Streams are fully specified here so other implementations can reproduce
/// them bit for bit from the same seed.
class Xorshift64Star {
public:
    using result_type = std::uint64_t;

    explicit Xorshift64Star(std::uint64_t seed) noexcept : state_(mix64(seed))
    {
        if (state_ == 0) state_ = 0x2545F4914F6CDD1DULL;
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    result_type operator()() noexcept
    {
        state_ ^= state_ >> 12;
        state_ ^= state_ << 25;
        state_ ^= state_ >> 27;
        return state_ * 0x2545F4914F6CDD1DULL;
    }

    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) noexcept { return uniform() < p; }

private:
    std::uint64_t state_;
};

enum class GeneratorKind { Bernoulli, MarkovAlternation, FixedPattern };

std::string_view to_string(GeneratorKind kind) noexcept;
GeneratorKind generator_kind_from_string(std::string_view s);

struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::Bernoulli;
    double p_heads = 0.5;       // Bernoulli
    double p_alternate = 0.5;   // MarkovAlternation
    double p_first_heads = 0.5; // MarkovAlternation
    std::vector<Flip> pattern;  // FixedPattern
    std::size_t length = 20;
    std::size_t count = 1;
    std::uint64_t seed = 0;

    /// Throws InvalidArgument on out-of-range probabilities, zero length or
    /// count, or an empty FixedPattern.
    void validate() const;
};

/// `count` sequences of `length` flips. Sequence i is drawn from its own
/// stream seeded with derive_seed(seed, i), so output is independent of
/// thread count. Provenance: model "synthetic:<kind>", prompt "synthetic",
/// replicate i.
std::vector<FlipSequence> generate(const GeneratorSpec& spec);

} // namespace flipbench
