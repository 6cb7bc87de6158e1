#include "flipbench/record.hpp"

#include "flipbench/error.hpp"

#include <fstream>
#include <istream>
#include <ostream>

namespace flipbench {

std::string_view to_string(PromptOrder order) noexcept
{
    return order == PromptOrder::HeadsFirstPrompt ? "heads-first" : "tails-first";
}

PromptOrder prompt_order_from_string(std::string_view s)
{
    if (s == "heads-first" || s == "HeadsFirstPrompt") return PromptOrder::HeadsFirstPrompt;
    if (s == "tails-first" || s == "TailsFirstPrompt") return PromptOrder::TailsFirstPrompt;
    throw InvalidArgument("unknown prompt order '" + std::string(s) + "'");
}

std::string_view to_string(RecordKind kind) noexcept
{
    switch (kind) {
    case RecordKind::Parsed: return "parsed";
    case RecordKind::Refusal: return "refusal";
    case RecordKind::Unparseable: return "unparseable";
    case RecordKind::Partial: return "partial";
    case RecordKind::Error: return "error";
    }
    return "error";
}

RecordKind record_kind_from_string(std::string_view s)
{
    if (s == "error") return RecordKind::Error;
    if (auto k = parse_kind_from_string(s)) return record_kind(*k);
    throw DataError("unknown parse_kind '" + std::string(s) + "'");
}

RecordKind record_kind(ParseKind kind) noexcept
{
    switch (kind) {
    case ParseKind::Parsed: return RecordKind::Parsed;
    case ParseKind::Refusal: return RecordKind::Refusal;
    case ParseKind::Unparseable: return RecordKind::Unparseable;
    case ParseKind::Partial: return RecordKind::Partial;
    }
    return RecordKind::Unparseable;
}

FlipSequence CollectionRecord::sequence() const
{
    return {flips, {model, prompt_id, temperature, replicate}};
}

nlohmann::ordered_json to_json(const CollectionRecord& r)
{
    nlohmann::ordered_json j;
    j["ts"] = r.ts;
    j["model"] = r.model;
    j["prompt_id"] = r.prompt_id;
    j["temperature"] = r.temperature;
    j["replicate"] = r.replicate;
    j["raw"] = r.raw;
    j["parse_kind"] = to_string(r.kind);
    j["flips"] = to_compact(r.flips);
    j["attempts"] = r.attempts;
    j["note"] = r.note;
    return j;
}

CollectionRecord record_from_json(const nlohmann::json& j)
{
    try {
        CollectionRecord r;
        r.ts = j.value("ts", "");
        r.model = j.at("model").get<std::string>();
        r.prompt_id = j.at("prompt_id").get<std::string>();
        r.temperature = j.at("temperature").get<double>();
        r.replicate = j.at("replicate").get<int>();
        r.raw = j.value("raw", "");
        r.kind = record_kind_from_string(j.at("parse_kind").get<std::string>());
        r.flips = from_compact(j.value("flips", ""));
        r.attempts = j.value("attempts", 1);
        r.note = j.value("note", "");
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed record: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw DataError(std::string("malformed record: ") + e.what());
    }
}

std::string to_jsonl_line(const CollectionRecord& record)
{
    // Invalid UTF-8 in raw responses is replaced rather than rejected.
    return to_json(record).dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

void write_jsonl(std::ostream& out, std::span<const CollectionRecord> records)
{
    for (const auto& r : records) out << to_jsonl_line(r) << '\n';
}

void write_jsonl(const std::filesystem::path& path, std::span<const CollectionRecord> records)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    write_jsonl(out, records);
    if (!out) throw DataError("failed writing " + path.string());
}

std::vector<CollectionRecord> read_jsonl(std::istream& in)
{
    std::vector<CollectionRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(record_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<CollectionRecord> read_jsonl(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return read_jsonl(in);
}

std::vector<CollectionRecord> records_from_sequences(std::span<const FlipSequence> seqs)
{
    std::vector<CollectionRecord> out;
    out.reserve(seqs.size());
    for (const auto& s : seqs) {
        CollectionRecord r;
        r.ts = "1970-01-01T00:00:00Z";
        r.model = s.meta.model;
        r.prompt_id = s.meta.prompt_id;
        r.temperature = s.meta.temperature;
        r.replicate = s.meta.replicate;
        r.raw = serialize(s.flips);
        r.kind = RecordKind::Parsed;
        r.flips = s.flips;
        r.attempts = 1;
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace flipbench
