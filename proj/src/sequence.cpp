#include "flipbench/sequence.hpp"

#include "flipbench/error.hpp"

#include <algorithm>
#include <cctype>

namespace flipbench {

std::string_view to_string(ParseKind kind) noexcept
{
    switch (kind) {
    case ParseKind::Parsed: return "parsed";
    case ParseKind::Refusal: return "refusal";
    case ParseKind::Unparseable: return "unparseable";
    case ParseKind::Partial: return "partial";
    }
    return "unparseable";
}

std::optional<ParseKind> parse_kind_from_string(std::string_view s) noexcept
{
    if (s == "parsed") return ParseKind::Parsed;
    if (s == "refusal") return ParseKind::Refusal;
    if (s == "unparseable") return ParseKind::Unparseable;
    if (s == "partial") return ParseKind::Partial;
    return std::nullopt;
}

std::vector<std::string> default_refusal_lexicon()
{
    return {"cannot", "unable", "random number generator", "language model"};
}

namespace {

std::string lowercase(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool is_separator(unsigned char c)
{
    return std::isspace(c) || c == ',' || c == ';' || c == '|' || c == '/';
}

// Characters trimmed from both ends of a token: quotes, brackets, list
// punctuation, emphasis markers.
bool is_wrapper(unsigned char c)
{
    switch (c) {
    case '\'': case '"': case '`': case '*': case '_': case '(': case ')': case '[': case ']':
    case '{': case '}': case '<': case '>': case '.': case ':': case '!': case '?': case '-':
        return true;
    default:
        return false;
    }
}

bool is_retry_annotation(std::string_view lower_line)
{
    return lower_line.find("retry") != std::string_view::npos ||
           lower_line.find("retrying") != std::string_view::npos ||
           lower_line.find("bad flip") != std::string_view::npos;
}

// Appends the flips denoted by one token, if it is a flip token at all.
void read_token(std::string_view token, std::vector<Flip>& out)
{
    while (!token.empty() && is_wrapper(static_cast<unsigned char>(token.front())))
        token.remove_prefix(1);
    while (!token.empty() && is_wrapper(static_cast<unsigned char>(token.back())))
        token.remove_suffix(1);
    if (token.empty()) return;

    if (token == "heads" || token == "head") {
        out.push_back(Flip::Heads);
        return;
    }
    if (token == "tails" || token == "tail") {
        out.push_back(Flip::Tails);
        return;
    }
    if (std::all_of(token.begin(), token.end(), [](char c) { return c == 'h' || c == 't'; })) {
        for (char c : token) out.push_back(c == 'h' ? Flip::Heads : Flip::Tails);
    }
}

} // namespace

ParseOutcome parse_response(std::string_view text, const ParseOptions& options)
{
    const std::string lower = lowercase(text);
    std::vector<Flip> flips;

    std::size_t line_start = 0;
    while (line_start <= lower.size()) {
        std::size_t line_end = lower.find('\n', line_start);
        if (line_end == std::string::npos) line_end = lower.size();
        const std::string_view line(lower.data() + line_start, line_end - line_start);

        if (!is_retry_annotation(line)) {
            std::size_t i = 0;
            while (i < line.size()) {
                while (i < line.size() && is_separator(static_cast<unsigned char>(line[i]))) ++i;
                std::size_t j = i;
                while (j < line.size() && !is_separator(static_cast<unsigned char>(line[j]))) ++j;
                if (j > i) read_token(line.substr(i, j - i), flips);
                i = j;
            }
        }
        line_start = line_end + 1;
    }

    ParseOutcome outcome;
    if (flips.empty()) {
        const bool refusal =
            std::any_of(options.refusal_lexicon.begin(), options.refusal_lexicon.end(),
                        [&](const std::string& phrase) {
                            return !phrase.empty() && lower.find(lowercase(phrase)) != std::string::npos;
                        });
        outcome.kind = refusal ? ParseKind::Refusal : ParseKind::Unparseable;
        outcome.note = refusal ? "refusal: no flip tokens, matched refusal lexicon" : "no flip tokens found";
        return outcome;
    }

    outcome.kind = ParseKind::Parsed;
    if (options.expected_count) {
        const auto expected = static_cast<std::size_t>(std::max(*options.expected_count, 1));
        if (flips.size() > expected) {
            outcome.note = "truncated " + std::to_string(flips.size()) + " flips to " + std::to_string(expected);
            flips.resize(expected);
        } else if (flips.size() < expected) {
            outcome.kind = ParseKind::Partial;
            outcome.note = "found " + std::to_string(flips.size()) + " of " + std::to_string(expected) + " flips";
        }
    }
    outcome.flips = std::move(flips);
    return outcome;
}

ParseOutcome parse_response(std::string_view text, std::optional<int> expected_count)
{
    ParseOptions options;
    options.expected_count = expected_count;
    return parse_response(text, options);
}

std::string serialize(std::span<const Flip> flips)
{
    std::string out;
    out.reserve(flips.size() * 3);
    for (std::size_t i = 0; i < flips.size(); ++i) {
        if (i) out += ", ";
        out += to_char(flips[i]);
    }
    return out;
}

std::string to_compact(std::span<const Flip> flips)
{
    std::string out;
    out.reserve(flips.size());
    for (Flip f : flips) out += to_char(f);
    return out;
}

std::vector<Flip> from_compact(std::string_view s)
{
    std::vector<Flip> out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == 'H')
            out.push_back(Flip::Heads);
        else if (c == 'T')
            out.push_back(Flip::Tails);
        else
            throw InvalidArgument(std::string("invalid flip character '") + c + "'");
    }
    return out;
}

std::vector<std::uint8_t> encode(std::span<const Flip> flips)
{
    std::vector<std::uint8_t> out(flips.size());
    std::transform(flips.begin(), flips.end(), out.begin(),
                   [](Flip f) { return static_cast<std::uint8_t>(f); });
    return out;
}

std::vector<Flip> decode(std::span<const std::uint8_t> bits)
{
    std::vector<Flip> out(bits.size());
    std::transform(bits.begin(), bits.end(), out.begin(),
                   [](std::uint8_t b) { return b ? Flip::Heads : Flip::Tails; });
    return out;
}

std::vector<Window> windows(const FlipSequence& seq, std::size_t k, std::size_t parent)
{
    if (k == 0) throw InvalidArgument("window length must be >= 1");
    std::vector<Window> out;
    if (seq.size() < k) return out;
    out.reserve(seq.size() - k + 1);
    for (std::size_t off = 0; off + k <= seq.size(); ++off) {
        Window w;
        w.flips.assign(seq.flips.begin() + static_cast<std::ptrdiff_t>(off),
                       seq.flips.begin() + static_cast<std::ptrdiff_t>(off + k));
        w.offset = off;
        w.parent = parent;
        out.push_back(std::move(w));
    }
    return out;
}

std::vector<Window> windows(std::span<const FlipSequence> seqs, std::size_t k)
{
    if (k == 0) throw InvalidArgument("window length must be >= 1");
    std::vector<Window> out;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        auto ws = windows(seqs[i], k, i);
        std::move(ws.begin(), ws.end(), std::back_inserter(out));
    }
    return out;
}

std::uint64_t pack(std::span<const Flip> flips)
{
    if (flips.size() > 64) throw InvalidArgument("window longer than 64 flips cannot be packed");
    std::uint64_t code = 0;
    for (std::size_t i = 0; i < flips.size(); ++i)
        if (flips[i] == Flip::Heads) code |= std::uint64_t{1} << i;
    return code;
}

} // namespace flipbench
