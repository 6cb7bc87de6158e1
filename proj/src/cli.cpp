#include "flipbench/cli.hpp"

#include "flipbench/collector.hpp"
#include "flipbench/config.hpp"
#include "flipbench/csv.hpp"
#include "flipbench/error.hpp"
#include "flipbench/generators.hpp"
#include "flipbench/report.hpp"
#include "flipbench/selftest.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace flipbench {

namespace {

using ojson = nlohmann::ordered_json;

struct AnalysisFlags {
    std::optional<std::string> config;
    std::optional<int> window;
    std::optional<int> run_window;
    std::optional<std::string> baseline;
    std::optional<std::uint64_t> baseline_samples;
    std::optional<std::uint64_t> baseline_seed;
    std::optional<std::string> human_baselines;
    std::optional<std::string> ngram_mode;
    std::optional<int> folds;
    std::optional<std::uint64_t> cv_seed;
    bool include_partial = false;
    bool no_predictor = false;

    void add_to(CLI::App* app, bool predictor_flags = true)
    {
        app->add_option("--window", window, "Window length (default 8)");
        app->add_option("--run-window", run_window, "Prefix length for run statistics (default 7)");
        app->add_option("--baseline", baseline, "Baseline mode: exact or monte-carlo");
        app->add_option("--baseline-samples", baseline_samples, "Monte Carlo baseline samples");
        app->add_option("--baseline-seed", baseline_seed, "Monte Carlo baseline seed");
        app->add_option("--human-baselines", human_baselines, "Human baseline registry file");
        app->add_option("--ngram-mode", ngram_mode, "N-gram counting: window or sequence");
        app->add_flag("--include-partial", include_partial, "Feed partial responses to the battery");
        if (predictor_flags) {
            app->add_option("--folds", folds, "Cross-validation folds");
            app->add_option("--cv-seed", cv_seed, "Fold assignment seed");
            app->add_flag("--no-predictor", no_predictor, "Skip the LASSO predictor");
        }
    }

    Config load() const
    {
        Config c = load_config(config ? std::optional<std::filesystem::path>(*config) : std::nullopt);
        ReportOptions& o = c.report;
        if (window) {
            o.window = *window;
            if (!run_window && o.run_window > o.window) o.run_window = o.window;
        }
        if (run_window) o.run_window = *run_window;
        if (baseline) o.baseline_mode = baseline_mode_from_string(*baseline);
        if (baseline_samples) o.baseline_samples = *baseline_samples;
        if (baseline_seed) o.baseline_seed = *baseline_seed;
        if (human_baselines) o.human = load_human_baselines(std::filesystem::path(*human_baselines));
        if (ngram_mode) o.ngram_mode = ngram_mode_from_string(*ngram_mode);
        if (folds) o.cv.folds = *folds;
        if (cv_seed) o.cv.seed = *cv_seed;
        if (include_partial) o.include_partial = true;
        if (no_predictor) o.run_predictor = false;
        return c;
    }
};

void write_text(const std::string& path, const std::string& text, std::ostream& out)
{
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open " + path + " for writing");
    f << text;
    if (!f) throw DataError("failed writing " + path);
}

std::vector<double> parse_csv_doubles(const std::string& s)
{
    std::vector<double> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double d = 0.0;
        try {
            d = std::stod(item, &used);
        } catch (const std::exception&) {
            throw InvalidArgument("bad temperature '" + item + "'");
        }
        if (item.find_first_not_of(" \t", used) != std::string::npos)
            throw InvalidArgument("bad temperature '" + item + "'");
        v.push_back(d);
    }
    if (v.empty()) throw InvalidArgument("--temps needs at least one value");
    return v;
}

std::string yield_summary(std::span<const CollectionRecord> records)
{
    std::map<std::string, std::size_t> counts;
    for (const auto& r : records) ++counts[std::string(to_string(r.kind))];
    std::string s = std::to_string(records.size()) + " records";
    for (const auto& [kind, n] : counts) s += ", " + std::to_string(n) + " " + kind;
    return s;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"flipbench: randomness battery for binary sequences from language models and generators"};
    app.require_subcommand(1);
    app.set_version_flag("--version", FLIPBENCH_VERSION);

    // collect
    auto* collect = app.add_subcommand("collect", "Sweep prompts x temperatures x replicates against an endpoint");
    std::optional<std::string> collect_config;
    std::string collect_out;
    std::optional<std::string> endpoint_url, model_id, temps;
    std::optional<int> replicates, max_parallel, rpm;
    std::optional<std::uint64_t> collect_seed;
    bool allow_high = false;
    collect->add_option("--config", collect_config, "Config file");
    collect->add_option("--out", collect_out, "Output JSONL file")->required();
    collect->add_option("--endpoint", endpoint_url, "Base URL of a chat-completions API");
    collect->add_option("--model", model_id, "Model id");
    collect->add_option("--replicates", replicates, "Replicates per cell");
    collect->add_option("--temps", temps, "Comma-separated temperatures");
    collect->add_option("--seed", collect_seed, "Seed for retry jitter");
    collect->add_option("--max-parallel", max_parallel, "Requests in flight");
    collect->add_option("--rpm", rpm, "Requests-per-minute cap (<= 0 disables)");
    collect->add_flag("--allow-high-temperature", allow_high, "Permit temperatures above 1.5");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Write synthetic sequences in the collection record format");
    std::optional<std::string> simulate_config;
    std::string sim_kind = "bernoulli", sim_pattern = "HT", sim_out = "-";
    std::size_t sim_count = 30, sim_length = 20;
    std::uint64_t sim_seed = 0;
    double sim_p_heads = 0.5, sim_p_alt = 0.5, sim_p_first = 0.5;
    simulate->add_option("--config", simulate_config, "Config file (accepted for uniformity)");
    simulate->add_option("--kind", sim_kind, "bernoulli, markov-alternation or fixed-pattern");
    simulate->add_option("--count", sim_count, "Number of sequences");
    simulate->add_option("--length", sim_length, "Flips per sequence");
    simulate->add_option("--seed", sim_seed, "Generator seed");
    simulate->add_option("--p-heads", sim_p_heads, "Bernoulli heads probability");
    simulate->add_option("--p-alternate", sim_p_alt, "Markov alternation probability");
    simulate->add_option("--p-first-heads", sim_p_first, "Markov first-flip heads probability");
    simulate->add_option("--pattern", sim_pattern, "Fixed pattern, e.g. HT");
    simulate->add_option("--out", sim_out, "Output JSONL file (- for stdout)");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Build the full report from JSONL records");
    AnalysisFlags analyze_flags;
    std::string analyze_in, analyze_out = "-";
    std::optional<std::string> analyze_csv;
    analyze->add_option("--config", analyze_flags.config, "Config file");
    analyze->add_option("--in", analyze_in, "Input JSONL records")->required();
    analyze->add_option("--out", analyze_out, "Report JSON file (- for stdout)");
    analyze->add_option("--csv", analyze_csv, "Also write the CSV bundle to this directory");
    analyze_flags.add_to(analyze);

    // predict
    auto* predict = app.add_subcommand("predict", "Cross-validated LASSO next-flip predictor per cell");
    AnalysisFlags predict_flags;
    std::string predict_in, predict_out = "-";
    predict->add_option("--config", predict_flags.config, "Config file");
    predict->add_option("--in", predict_in, "Input JSONL records")->required();
    predict->add_option("--out", predict_out, "Output JSON file (- for stdout)");
    predict->add_option("--window", predict_flags.window, "Window length (default 8)");
    predict->add_option("--folds", predict_flags.folds, "Cross-validation folds");
    predict->add_option("--cv-seed", predict_flags.cv_seed, "Fold assignment seed");
    predict->add_flag("--include-partial", predict_flags.include_partial, "Use partial responses");

    // report
    auto* report = app.add_subcommand("report", "Re-render a saved report as JSON and/or a CSV bundle");
    std::optional<std::string> report_config, report_out, report_csv;
    std::string report_in;
    report->add_option("--config", report_config, "Config file (accepted for uniformity)");
    report->add_option("--in", report_in, "Report JSON produced by analyze or selftest")->required();
    report->add_option("--out", report_out, "Rewrite the report JSON here");
    report->add_option("--csv", report_csv, "Write the CSV bundle to this directory");

    // selftest
    auto* selftest = app.add_subcommand("selftest", "Bernoulli self-consistency suite");
    AnalysisFlags selftest_flags;
    std::uint64_t st_seed = 7, st_samples = 10000;
    std::optional<std::string> st_out, st_csv;
    selftest->add_option("--config", selftest_flags.config, "Config file");
    selftest->add_option("--seed", st_seed, "Generator seed");
    selftest->add_option("--samples", st_samples, "Independent windows to generate");
    selftest->add_option("--out", st_out, "Write the selftest report JSON here");
    selftest->add_option("--csv", st_csv, "Write the CSV bundle to this directory");
    selftest_flags.add_to(selftest);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        if (code == 0) return kExitOk;
        err << app.help();
        return kExitUsage;
    }

    try {
        if (*collect) {
            Config cfg = load_config(collect_config ? std::optional<std::filesystem::path>(*collect_config)
                                                    : std::nullopt);
            if (endpoint_url) cfg.endpoint.base_url = *endpoint_url;
            if (model_id) cfg.endpoint.model = *model_id;
            if (max_parallel) cfg.endpoint.max_parallel = *max_parallel;
            if (rpm) cfg.endpoint.rpm_cap = *rpm;
            if (replicates) cfg.plan.replicates = *replicates;
            if (temps) cfg.plan.temperatures = parse_csv_doubles(*temps);
            if (collect_seed) cfg.plan.seed = *collect_seed;
            if (allow_high) cfg.plan.allow_high_temperature = true;
            if (cfg.endpoint.base_url.empty()) throw InvalidArgument("no endpoint: pass --endpoint or set endpoint.base_url");
            if (cfg.endpoint.model.empty()) throw InvalidArgument("no model: pass --model or set endpoint.model");
            load_api_key_from_env(cfg.endpoint);
            err << "collecting " << cfg.plan.request_count() << " responses from " << cfg.endpoint.model << "\n";
            const auto records = run_sweep(cfg.plan, cfg.endpoint, make_http_transport(cfg.endpoint));
            write_jsonl(std::filesystem::path(collect_out), records);
            err << yield_summary(records) << "\n";
            return kExitOk;
        }

        if (*simulate) {
            if (simulate_config) load_config(std::filesystem::path(*simulate_config));
            GeneratorSpec spec;
            spec.kind = generator_kind_from_string(sim_kind);
            spec.p_heads = sim_p_heads;
            spec.p_alternate = sim_p_alt;
            spec.p_first_heads = sim_p_first;
            if (spec.kind == GeneratorKind::FixedPattern) spec.pattern = from_compact(sim_pattern);
            spec.length = sim_length;
            spec.count = sim_count;
            spec.seed = sim_seed;
            const auto records = records_from_sequences(generate(spec));
            std::ostringstream buf;
            write_jsonl(buf, records);
            write_text(sim_out, buf.str(), out);
            return kExitOk;
        }

        if (*analyze) {
            const Config cfg = analyze_flags.load();
            const auto records = read_jsonl(std::filesystem::path(analyze_in));
            if (records.empty()) throw DataError(analyze_in + " contains no records");
            const auto doc = to_json(build_report(records, cfg.report));
            write_text(analyze_out, render_report_json(doc), out);
            if (analyze_csv) write_csv_bundle(doc, *analyze_csv);
            err << "analyzed " << yield_summary(records) << " in " << doc.at("cells").size() << " cells\n";
            return kExitOk;
        }

        if (*predict) {
            Config cfg = predict_flags.load();
            const auto records = read_jsonl(std::filesystem::path(predict_in));
            if (records.empty()) throw DataError(predict_in + " contains no records");
            cfg.report.run_predictor = true;
            const auto doc = to_json(build_report(records, cfg.report));
            ojson cells = ojson::array();
            for (const auto& c : doc.at("cells"))
                cells.push_back({{"cell", c.at("cell")}, {"windows", c.at("windows")}, {"predictor", c.at("predictor")}});
            const ojson result = {{"tool", "flipbench"},
                                  {"version", FLIPBENCH_VERSION},
                                  {"config_digest", doc.at("config_digest")},
                                  {"input_digest", doc.at("input_digest")},
                                  {"predictor", doc.at("options").at("predictor")},
                                  {"cells", cells},
                                  {"mse_series", doc.at("tables").at("mse_series")}};
            write_text(predict_out, render_report_json(result), out);
            return kExitOk;
        }

        if (*report) {
            if (report_config) load_config(std::filesystem::path(*report_config));
            if (!report_out && !report_csv) throw InvalidArgument("report: pass --out and/or --csv");
            const auto doc = read_report_json(report_in);
            if (report_csv) write_csv_bundle(doc, *report_csv);
            if (report_out) write_text(*report_out, render_report_json(doc), out);
            return kExitOk;
        }

        if (*selftest) {
            SelftestOptions so;
            so.seed = st_seed;
            so.samples = st_samples;
            so.report = selftest_flags.load().report;
            const auto result = run_selftest(so);
            for (const auto& c : result.checks)
                out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
            if (st_out) write_report_json(result.document, *st_out);
            if (st_csv) write_csv_bundle(result.document, *st_csv);
            out << (result.passed() ? "selftest passed" : "selftest FAILED") << "\n";
            return result.passed() ? kExitOk : kExitSelftest;
        }
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
    err << app.help();
    return kExitUsage;
}

} // namespace flipbench
