#include "flipbench/config.hpp"

#include "flipbench/error.hpp"

#include <fstream>
#include <set>

namespace flipbench {

namespace {

void check_keys(const nlohmann::json& obj, const std::string& section, const std::set<std::string>& allowed)
{
    if (!obj.is_object()) throw DataError("config section '" + section + "' must be an object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.contains(key)) throw DataError("unknown key '" + key + "' in config section '" + section + "'");
}

template <typename T>
void read(const nlohmann::json& obj, const char* key, T& out)
{
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

void apply_endpoint(const nlohmann::json& j, EndpointConfig& e)
{
    if (j.contains("api_key"))
        throw DataError(std::string("the API key is read from ") + kApiKeyEnv + " only; remove api_key from the config");
    check_keys(j, "endpoint",
               {"base_url", "model", "timeout_s", "max_retries", "backoff_base_s", "max_parallel", "rpm_cap"});
    read(j, "base_url", e.base_url);
    read(j, "model", e.model);
    read(j, "timeout_s", e.timeout_s);
    read(j, "max_retries", e.max_retries);
    read(j, "backoff_base_s", e.backoff_base_s);
    read(j, "max_parallel", e.max_parallel);
    read(j, "rpm_cap", e.rpm_cap);
}

void apply_analysis(const nlohmann::json& j, ReportOptions& o)
{
    check_keys(j, "analysis",
               {"window", "run_window", "ngram_orders", "ngram_mode", "include_partial", "baseline", "run_predictor",
                "prompt_orders", "human_ngram_fractions"});
    read(j, "window", o.window);
    read(j, "run_window", o.run_window);
    read(j, "ngram_orders", o.ngram_orders);
    if (j.contains("ngram_mode")) o.ngram_mode = ngram_mode_from_string(j.at("ngram_mode").get<std::string>());
    read(j, "include_partial", o.include_partial);
    read(j, "run_predictor", o.run_predictor);
    if (j.contains("baseline")) {
        const auto& b = j.at("baseline");
        check_keys(b, "analysis.baseline", {"mode", "samples", "seed"});
        if (b.contains("mode")) o.baseline_mode = baseline_mode_from_string(b.at("mode").get<std::string>());
        read(b, "samples", o.baseline_samples);
        read(b, "seed", o.baseline_seed);
    }
    if (j.contains("prompt_orders")) {
        for (const auto& [id, order] : j.at("prompt_orders").items())
            o.prompt_orders[id] = prompt_order_from_string(order.get<std::string>());
    }
    if (j.contains("human_ngram_fractions")) {
        o.human_ngram_fractions.clear();
        for (const auto& [n, frac] : j.at("human_ngram_fractions").items())
            o.human_ngram_fractions[std::stoi(n)] = frac.get<std::vector<double>>();
    }
}

void apply_predictor(const nlohmann::json& j, CVConfig& cv)
{
    check_keys(j, "predictor",
               {"folds", "lambda_grid", "grid_size", "grid_ratio", "seed", "tolerance", "max_sweeps"});
    read(j, "folds", cv.folds);
    read(j, "lambda_grid", cv.lambda_grid);
    read(j, "grid_size", cv.grid_size);
    read(j, "grid_ratio", cv.grid_ratio);
    read(j, "seed", cv.seed);
    read(j, "tolerance", cv.tolerance);
    read(j, "max_sweeps", cv.max_sweeps);
}

void apply_thresholds(const nlohmann::json& j, Thresholds& t)
{
    check_keys(j, "thresholds",
               {"se_multiplier", "first_flip_cutoff", "min_windows_stats", "predictor_windows_per_fold"});
    read(j, "se_multiplier", t.se_multiplier);
    read(j, "first_flip_cutoff", t.first_flip_cutoff);
    read(j, "min_windows_stats", t.min_windows_stats);
    read(j, "predictor_windows_per_fold", t.predictor_windows_per_fold);
}

} // namespace

Config config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir)
{
    Config c;
    try {
        check_keys(doc, "(top level)",
                   {"endpoint", "plan", "analysis", "predictor", "thresholds", "human_baselines",
                    "human_baselines_file"});
        if (doc.contains("endpoint")) apply_endpoint(doc.at("endpoint"), c.endpoint);
        if (doc.contains("plan")) {
            c.plan = plan_from_json(doc.at("plan"));
            c.report.prompt_orders.clear();
            for (const auto& p : c.plan.prompts)
                if (p.order) c.report.prompt_orders[p.id] = *p.order;
        }
        if (doc.contains("analysis")) apply_analysis(doc.at("analysis"), c.report);
        if (doc.contains("predictor")) apply_predictor(doc.at("predictor"), c.report.cv);
        if (doc.contains("thresholds")) apply_thresholds(doc.at("thresholds"), c.report.thresholds);
        if (doc.contains("human_baselines_file")) {
            std::filesystem::path p = doc.at("human_baselines_file").get<std::string>();
            if (p.is_relative()) p = base_dir / p;
            c.report.human = load_human_baselines(p);
        }
        if (doc.contains("human_baselines")) c.report.human.apply_overrides(doc.at("human_baselines"));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed config: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw DataError(std::string("malformed config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("malformed config: ") + e.what());
    }
    return c;
}

Config load_config(const std::optional<std::filesystem::path>& path)
{
    if (!path) return {};
    std::ifstream in(*path);
    if (!in) throw DataError("cannot open config " + path->string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("config " + path->string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(doc, path->parent_path());
}

} // namespace flipbench
