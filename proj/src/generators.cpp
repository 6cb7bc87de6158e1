#include "flipbench/generators.hpp"

#include "flipbench/error.hpp"

#include <cstdint>

namespace flipbench {

std::string_view to_string(GeneratorKind kind) noexcept
{
    switch (kind) {
    case GeneratorKind::Bernoulli: return "bernoulli";
    case GeneratorKind::MarkovAlternation: return "markov-alternation";
    case GeneratorKind::FixedPattern: return "fixed-pattern";
    }
    return "bernoulli";
}

GeneratorKind generator_kind_from_string(std::string_view s)
{
    if (s == "bernoulli") return GeneratorKind::Bernoulli;
    if (s == "markov-alternation" || s == "markov") return GeneratorKind::MarkovAlternation;
    if (s == "fixed-pattern" || s == "fixed") return GeneratorKind::FixedPattern;
    throw InvalidArgument("unknown generator kind '" + std::string(s) + "'");
}

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

} // namespace

void GeneratorSpec::validate() const
{
    if (!is_probability(p_heads) || !is_probability(p_alternate) || !is_probability(p_first_heads))
        throw InvalidArgument("generator probabilities must lie in [0, 1]");
    if (length < 1) throw InvalidArgument("generator length must be >= 1");
    if (count < 1) throw InvalidArgument("generator count must be >= 1");
    if (kind == GeneratorKind::FixedPattern && pattern.empty())
        throw InvalidArgument("fixed-pattern generator requires a non-empty pattern");
}

std::vector<FlipSequence> generate(const GeneratorSpec& spec)
{
    spec.validate();
    std::vector<FlipSequence> out(spec.count);
    const std::string model = "synthetic:" + std::string(to_string(spec.kind));
    const auto n = static_cast<std::int64_t>(spec.count);

#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < n; ++r) {
        const auto idx = static_cast<std::size_t>(r);
        Xorshift64Star rng(derive_seed(spec.seed, idx));
        FlipSequence& seq = out[idx];
        seq.meta = {model, "synthetic", 0.0, static_cast<int>(r)};
        seq.flips.resize(spec.length);

        switch (spec.kind) {
        case GeneratorKind::Bernoulli:
            for (auto& f : seq.flips) f = rng.bernoulli(spec.p_heads) ? Flip::Heads : Flip::Tails;
            break;
        case GeneratorKind::MarkovAlternation:
            seq.flips[0] = rng.bernoulli(spec.p_first_heads) ? Flip::Heads : Flip::Tails;
            for (std::size_t i = 1; i < spec.length; ++i)
                seq.flips[i] = rng.bernoulli(spec.p_alternate) ? complement(seq.flips[i - 1]) : seq.flips[i - 1];
            break;
        case GeneratorKind::FixedPattern:
            for (std::size_t i = 0; i < spec.length; ++i) seq.flips[i] = spec.pattern[i % spec.pattern.size()];
            break;
        }
    }
    return out;
}

} // namespace flipbench
