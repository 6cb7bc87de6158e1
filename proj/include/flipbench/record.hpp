#pragma once

#include "flipbench/sequence.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flipbench {

struct CellKey {
    std::string model;
    std::string prompt_id;
    double temperature = 0.0;

    auto operator<=>(const CellKey&) const = default;
};

enum class PromptOrder { HeadsFirstPrompt, TailsFirstPrompt };

std::string_view to_string(PromptOrder order) noexcept;
PromptOrder prompt_order_from_string(std::string_view s);

// Outcome of one request. Error means no response text was obtained.
enum class RecordKind { Parsed, Refusal, Unparseable, Partial, Error };

std::string_view to_string(RecordKind kind) noexcept;
RecordKind record_kind_from_string(std::string_view s);
RecordKind record_kind(ParseKind kind) noexcept;

/// One endpoint interaction. The JSONL persistence unit.
struct CollectionRecord {
    std::string ts;
    std::string model;
    std::string prompt_id;
    double temperature = 0.0;
    int replicate = 0;
    std::string raw;
    RecordKind kind = RecordKind::Unparseable;
    std::vector<Flip> flips;
    int attempts = 0;
    std::string note;

    CellKey cell() const { return {model, prompt_id, temperature}; }
    FlipSequence sequence() const;

    bool operator==(const CollectionRecord&) const = default;
};

/// Fixed key order: ts, model, prompt_id, temperature, replicate, raw,
/// parse_kind, flips, attempts, note.
nlohmann::ordered_json to_json(const CollectionRecord& record);
CollectionRecord record_from_json(const nlohmann::json& j);

std::string to_jsonl_line(const CollectionRecord& record);
void write_jsonl(std::ostream& out, std::span<const CollectionRecord> records);
void write_jsonl(const std::filesystem::path& path, std::span<const CollectionRecord> records);

/// Throws DataError on a missing file or a malformed line (with line number).
std::vector<CollectionRecord> read_jsonl(std::istream& in);
std::vector<CollectionRecord> read_jsonl(const std::filesystem::path& path);

/// Synthetic records for generated sequences: raw is the canonical
/// serialization, kind Parsed, one attempt, epoch timestamp.
std::vector<CollectionRecord> records_from_sequences(std::span<const FlipSequence> seqs);

} // namespace flipbench
