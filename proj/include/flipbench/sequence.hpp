#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flipbench {

// Heads is encoded as 1 everywhere downstream (n-gram keys, regression
// targets, phi coefficients).
enum class Flip : std::uint8_t { Tails = 0, Heads = 1 };

constexpr Flip complement(Flip f) noexcept { return f == Flip::Heads ? Flip::Tails : Flip::Heads; }
constexpr char to_char(Flip f) noexcept { return f == Flip::Heads ? 'H' : 'T'; }

struct Provenance {
    std::string model;
    std::string prompt_id;
    double temperature = 0.0;
    int replicate = 0;

    bool operator==(const Provenance&) const = default;
};

struct FlipSequence {
    std::vector<Flip> flips;
    Provenance meta;

    std::size_t size() const noexcept { return flips.size(); }
    bool empty() const noexcept { return flips.empty(); }
    bool operator==(const FlipSequence&) const = default;
};

enum class ParseKind { Parsed, Refusal, Unparseable, Partial };

std::string_view to_string(ParseKind kind) noexcept;
std::optional<ParseKind> parse_kind_from_string(std::string_view s) noexcept;

struct ParseOutcome {
    ParseKind kind = ParseKind::Unparseable;
    std::vector<Flip> flips; // empty unless Parsed or Partial
    std::string note;
};

/// Phrases that mark a response as a refusal when it contains no flips.
/// Matching is case-insensitive substring search.
std::vector<std::string> default_refusal_lexicon();

struct ParseOptions {
    std::optional<int> expected_count;
    std::vector<std::string> refusal_lexicon = default_refusal_lexicon();
};

/// Reads H/T/Heads/Tails tokens out of free text in textual order.
///
/// Tokens may be separated by commas, whitespace, newlines, or list
/// markers, and styles may be mixed within one response. Lines carrying a
/// retry annotation ("bad flip (retrying)") are skipped entirely. A run of
/// bare flip letters such as "HTTH" is read as four flips. When more flips
/// than expected are found the result is truncated and the note says so.
///
/// Never throws on any input text.
ParseOutcome parse_response(std::string_view text, const ParseOptions& options);
ParseOutcome parse_response(std::string_view text, std::optional<int> expected_count = std::nullopt);

/// Canonical serialization: "H, T, H".
std::string serialize(std::span<const Flip> flips);

/// Compact form used in JSONL records: "HTH". Throws InvalidArgument on any
/// character other than H or T.
std::string to_compact(std::span<const Flip> flips);
std::vector<Flip> from_compact(std::string_view s);

std::vector<std::uint8_t> encode(std::span<const Flip> flips);
std::vector<Flip> decode(std::span<const std::uint8_t> bits);

struct Window {
    std::vector<Flip> flips;
    std::size_t offset = 0;
    // Index of the parent sequence within the batch the window was cut
    // from. Cross-validation keeps windows with equal parent together.
    std::size_t parent = 0;

    std::size_t size() const noexcept { return flips.size(); }
};

/// All length-k slices at offsets 0..len-k. Empty when the sequence is
/// shorter than k. Throws InvalidArgument for k == 0.
std::vector<Window> windows(const FlipSequence& seq, std::size_t k, std::size_t parent = 0);

/// Windows of every sequence, with `parent` set to the sequence index.
std::vector<Window> windows(std::span<const FlipSequence> seqs, std::size_t k);

/// Bit i of the result is flip i (Heads = 1). Requires size() <= 64.
std::uint64_t pack(std::span<const Flip> flips);

} // namespace flipbench
