#include "flipbench/csv.hpp"

#include "flipbench/error.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace flipbench {

using ojson = nlohmann::ordered_json;

namespace {

std::string field(const ojson& v)
{
    if (v.is_null()) return "";
    if (v.is_string()) {
        const auto& s = v.get_ref<const std::string&>();
        if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += '"';
            q += c;
        }
        return q + "\"";
    }
    return v.dump();
}

class Table {
public:
    explicit Table(std::initializer_list<std::string> header) { row(std::vector<std::string>(header)); }
    explicit Table(const std::vector<std::string>& header) { row(header); }

    void row(const std::vector<std::string>& cells)
    {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ += ',';
            out_ += cells[i];
        }
        out_ += '\n';
    }
    void row(std::initializer_list<ojson> cells)
    {
        std::vector<std::string> s;
        for (const auto& c : cells) s.push_back(field(c));
        row(s);
    }
    std::string str() const { return out_; }

private:
    std::string out_;
};

bool insufficient(const ojson& block)
{
    return block.is_object() && block.contains("insufficient_data");
}

std::string shortfall_csv(const ojson& block)
{
    const auto& s = block.at("insufficient_data");
    Table t{"status", "unit", "required", "available"};
    t.row({ojson("insufficient_data"), s.at("unit"), s.at("required"), s.at("available")});
    return t.str();
}

std::string histogram_csv(const ojson& h, const char* index_name)
{
    Table t{index_name, "count", "mass", "expected", "delta"};
    const auto& counts = h.at("counts");
    const auto& mass = h.at("mass");
    const auto& expected = h.at("expected_mass");
    for (std::size_t i = 0; i < counts.size(); ++i)
        t.row({ojson(i), counts[i], mass[i], expected[i], ojson(mass[i].get<double>() - expected[i].get<double>())});
    return t.str();
}

std::string flag_field(const ojson& flag)
{
    if (flag.contains("insufficient_data")) return "insufficient";
    return flag.at("set").get<bool>() ? "true" : "false";
}

} // namespace

std::map<std::string, std::string> render_csv_bundle(const ojson& doc)
{
    std::map<std::string, std::string> files;
    try {
        const auto& tables = doc.at("tables");

        Table hp{"model", "prompt_id", "temperature", "sequences", "heads", "proportion"};
        for (const auto& r : tables.at("heads_proportion"))
            hp.row({r.at("model"), r.at("prompt_id"), r.at("temperature"), r.at("sequences"), r.at("heads"),
                    r.at("proportion")});
        files["heads_proportion.csv"] = hp.str();

        const auto& pm = tables.at("proportion_matrix");
        std::vector<std::string> header{"prompt_id", "temperature"};
        for (const auto& m : pm.at("models")) header.push_back(field(m));
        Table matrix(header);
        for (const auto& r : pm.at("rows")) {
            std::vector<std::string> cells{field(r.at("prompt_id")), field(r.at("temperature"))};
            for (const auto& v : r.at("values")) cells.push_back(field(v));
            matrix.row(cells);
        }
        files["proportion_matrix.csv"] = matrix.str();

        Table pr{"model", "prompt", "heads_first", "tails_first", "chi_square", "significant", "low_expected", "note"};
        for (const auto& p : tables.at("primacy")) {
            if (p.contains("insufficient_data")) {
                pr.row({p.at("model"), nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, p.at("insufficient_data")});
                continue;
            }
            for (const char* variant : {"heads_first_prompt", "tails_first_prompt"}) {
                const auto& row = p.at(variant);
                pr.row({p.at("model"), ojson(variant), row.at("heads_first"), row.at("tails_first"),
                        p.at("chi_square"), p.at("significant"), p.at("low_expected"), nullptr});
            }
        }
        files["primacy.csv"] = pr.str();

        Table mse{"model", "prompt_id", "temperature", "windows", "lambda", "mse", "gap_ratio"};
        for (const auto& r : tables.at("mse_series"))
            mse.row({r.at("model"), r.at("prompt_id"), r.at("temperature"), r.at("windows"), r.at("lambda"),
                     r.at("mse"), r.at("gap_ratio")});
        files["mse_series.csv"] = mse.str();

        Table cells{"cell",
                    "model",
                    "prompt_id",
                    "temperature",
                    "records",
                    "parsed",
                    "partial",
                    "refusal",
                    "unparseable",
                    "error",
                    "sequences",
                    "windows",
                    "heads_proportion",
                    "alternation_mean",
                    "mse",
                    "excess_alternation",
                    "run_aversion",
                    "first_flip_bias",
                    "over_balance"};
        const auto& cell_docs = doc.at("cells");
        for (std::size_t i = 0; i < cell_docs.size(); ++i) {
            const auto& c = cell_docs[i];
            char name[32];
            std::snprintf(name, sizeof name, "cell_%03zu", i);
            const std::string dir = std::string("cells/") + name + "/";

            const auto& key = c.at("cell");
            const auto& y = c.at("yield");
            const auto& hp_block = c.at("heads_proportion");
            const auto& alt = c.at("alternation_histogram");
            const auto& pred = c.at("predictor");
            const auto& flags = c.at("flags");
            cells.row(std::vector<std::string>{
                name,
                field(key.at("model")),
                field(key.at("prompt_id")),
                field(key.at("temperature")),
                field(y.at("records")),
                field(y.at("parsed")),
                field(y.at("partial")),
                field(y.at("refusal")),
                field(y.at("unparseable")),
                field(y.at("error")),
                field(y.at("sequences")),
                field(c.at("windows").at("count")),
                hp_block.contains("value") ? field(hp_block.at("value")) : "",
                alt.contains("mean") ? field(alt.at("mean")) : "",
                pred.contains("mse") ? field(pred.at("mse")) : "",
                flag_field(flags.at("excess_alternation")),
                flag_field(flags.at("run_aversion")),
                flag_field(flags.at("first_flip_bias")),
                flag_field(flags.at("over_balance")),
            });

            if (insufficient(c.at("heads_histogram"))) {
                const std::string marker = shortfall_csv(c.at("heads_histogram"));
                for (const char* f : {"heads_histogram.csv", "alternation_histogram.csv", "run_ratios.csv",
                                      "ngrams.csv", "correlation.csv", "correlation_matrix.csv"})
                    files[dir + f] = marker;
                continue;
            }

            files[dir + "heads_histogram.csv"] = histogram_csv(c.at("heads_histogram"), "heads");
            files[dir + "alternation_histogram.csv"] = histogram_csv(alt, "alternations");

            Table runs{"length", "count", "expected", "ratio"};
            for (const auto& r : c.at("runs").at("by_length"))
                runs.row({r.at("length"), r.at("count"), r.at("expected"), r.at("ratio")});
            files[dir + "run_ratios.csv"] = runs.str();

            bool has_human = false;
            for (const auto& t : c.at("ngrams").at("tables"))
                for (const auto& r : t.at("rows")) has_human = has_human || r.contains("human");
            std::vector<std::string> ngram_header{"ngram", "count", "fraction", "expected", "delta"};
            if (has_human) ngram_header.push_back("human");
            Table ngrams(ngram_header);
            for (const auto& t : c.at("ngrams").at("tables"))
                for (const auto& r : t.at("rows")) {
                    std::vector<std::string> cells{field(r.at("ngram")), field(r.at("count")), field(r.at("fraction")),
                                                   field(r.at("expected")), field(r.at("delta"))};
                    if (has_human) cells.push_back(r.contains("human") ? field(r.at("human")) : "");
                    ngrams.row(cells);
                }
            files[dir + "ngrams.csv"] = ngrams.str();

            Table corr{"position", "phi"};
            const auto& phi = c.at("correlation").at("phi");
            for (std::size_t p = 0; p < phi.size(); ++p) corr.row({ojson(p + 1), phi[p]});
            files[dir + "correlation.csv"] = corr.str();

            const auto& m = c.at("correlation_matrix").at("phi");
            std::vector<std::string> mh{"position"};
            for (std::size_t p = 0; p < m.size(); ++p) mh.push_back(std::to_string(p + 1));
            Table mt(mh);
            for (std::size_t p = 0; p < m.size(); ++p) {
                std::vector<std::string> row{std::to_string(p + 1)};
                for (const auto& v : m[p]) row.push_back(field(v));
                mt.row(row);
            }
            files[dir + "correlation_matrix.csv"] = mt.str();
        }
        files["cells.csv"] = cells.str();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed report document: ") + e.what());
    }
    return files;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw DataError("failed writing " + path.string());
}

} // namespace

void write_csv_bundle(const ojson& doc, const std::filesystem::path& dir)
{
    const auto files = render_csv_bundle(doc);
    std::error_code ec;
    for (const auto& [rel, content] : files) {
        const auto path = dir / rel;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw DataError("cannot create " + path.parent_path().string() + ": " + ec.message());
        write_file(path, content);
    }
}

std::string render_report_json(const ojson& doc)
{
    return doc.dump(2) + "\n";
}

void write_report_json(const ojson& doc, const std::filesystem::path& path)
{
    write_file(path, render_report_json(doc));
}

ojson read_report_json(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open report " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return ojson::parse(ss.str());
    } catch (const nlohmann::json::exception& e) {
        throw DataError("report " + path.string() + " is not valid JSON: " + e.what());
    }
}

} // namespace flipbench
