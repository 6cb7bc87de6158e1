#include "flipbench/baselines.hpp"

#include "flipbench/error.hpp"
#include "flipbench/generators.hpp"

#include <cmath>
#include <fstream>

namespace flipbench {

namespace {

std::vector<int> default_orders(int k)
{
    std::vector<int> orders;
    for (int n = 1; n <= std::min(k, 6); ++n) orders.push_back(n);
    return orders;
}

double se_of_proportion(double p, double n) { return std::sqrt(std::max(p * (1.0 - p), 0.0) / n); }

// Fills every derived field of the table from its tally. Standard errors are
// those of a sample mean over `tally.windows` windows; the caller zeroes
// them for exact tables.
void derive(BaselineTable& b)
{
    const auto& t = b.tally;
    const auto n = static_cast<double>(t.windows);
    const auto k = static_cast<std::size_t>(b.k);

    b.heads_pmf.assign(k + 1, 0.0);
    b.heads_pmf_se.assign(k + 1, 0.0);
    for (std::size_t x = 0; x <= k; ++x) {
        b.heads_pmf[x] = static_cast<double>(t.heads[x]) / n;
        b.heads_pmf_se[x] = se_of_proportion(b.heads_pmf[x], n);
    }

    b.alternation_pmf.assign(k, 0.0);
    b.alternation_pmf_se.assign(k, 0.0);
    double mean = 0.0;
    double second = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
        b.alternation_pmf[a] = static_cast<double>(t.alternations[a]) / n;
        b.alternation_pmf_se[a] = se_of_proportion(b.alternation_pmf[a], n);
        mean += static_cast<double>(a) * b.alternation_pmf[a];
        second += static_cast<double>(a * a) * b.alternation_pmf[a];
    }
    b.alternation_mean = mean;
    b.alternation_sd = std::sqrt(std::max(second - mean * mean, 0.0));
    b.alternation_mean_se = b.alternation_sd / std::sqrt(n);

    b.expected_runs.assign(k + 1, 0.0);
    b.expected_runs_sd.assign(k + 1, 0.0);
    b.expected_runs_se.assign(k + 1, 0.0);
    for (std::size_t L = 1; L <= k; ++L) {
        const double m = static_cast<double>(t.runs[L]) / n;
        const double sq = static_cast<double>(t.runs_sq[L]) / n;
        b.expected_runs[L] = m;
        b.expected_runs_sd[L] = std::sqrt(std::max(sq - m * m, 0.0));
        b.expected_runs_se[L] = b.expected_runs_sd[L] / std::sqrt(n);
    }

    b.ngram_fractions.clear();
    b.ngram_fractions_se.clear();
    for (std::size_t s = 0; s < t.ngram_orders.size(); ++s) {
        const int order = t.ngram_orders[s];
        const double per_window = static_cast<double>(b.k - order + 1);
        const double total = per_window * n;
        std::vector<double> frac(t.ngrams[s].size());
        std::vector<double> se(t.ngrams[s].size());
        for (std::size_t key = 0; key < frac.size(); ++key) {
            frac[key] = static_cast<double>(t.ngrams[s][key]) / total;
            // Per-window fraction has mean frac and second moment sq / per_window^2.
            const double sq = static_cast<double>(t.ngrams_sq[s][key]) / n / (per_window * per_window);
            se[key] = std::sqrt(std::max(sq - frac[key] * frac[key], 0.0) / n);
        }
        b.ngram_fractions[order] = std::move(frac);
        b.ngram_fractions_se[order] = std::move(se);
    }
}

void zero_standard_errors(BaselineTable& b)
{
    std::fill(b.heads_pmf_se.begin(), b.heads_pmf_se.end(), 0.0);
    std::fill(b.alternation_pmf_se.begin(), b.alternation_pmf_se.end(), 0.0);
    b.alternation_mean_se = 0.0;
    std::fill(b.expected_runs_se.begin(), b.expected_runs_se.end(), 0.0);
    for (auto& [order, se] : b.ngram_fractions_se) std::fill(se.begin(), se.end(), 0.0);
}

} // namespace

double BaselineTable::heads_mean() const
{
    double mean = 0.0;
    for (std::size_t x = 0; x < heads_pmf.size(); ++x) mean += static_cast<double>(x) * heads_pmf[x];
    return mean;
}

BaselineTable exact_baseline(int k)
{
    if (k < 1 || k > kMaxExactWindow)
        throw InvalidArgument("exact_baseline supports 1 <= k <= 24 (got " + std::to_string(k) +
                              "); use monte_carlo_baseline for longer windows");
    BaselineTable b;
    b.k = k;
    b.exact = true;
    b.samples = std::uint64_t{1} << k;
    b.tally = kernels::tally_all({k, default_orders(k), false});
    derive(b);
    zero_standard_errors(b);
    return b;
}

BaselineTable monte_carlo_baseline(int k, std::uint64_t samples, std::uint64_t seed, double p_heads)
{
    if (samples < 1000) throw InvalidArgument("monte_carlo_baseline requires samples >= 1000");
    if (k < 1 || k > 64) throw InvalidArgument("monte_carlo_baseline requires 1 <= k <= 64");
    if (!(p_heads >= 0.0 && p_heads <= 1.0)) throw InvalidArgument("p_heads must lie in [0, 1]");

    std::vector<std::uint64_t> codes(samples);
    Xorshift64Star rng(seed);
    for (auto& code : codes) {
        code = 0;
        for (int i = 0; i < k; ++i)
            if (rng.bernoulli(p_heads)) code |= std::uint64_t{1} << i;
    }

    BaselineTable b;
    b.k = k;
    b.exact = false;
    b.samples = samples;
    b.seed = seed;
    b.p_heads = p_heads;
    b.mse_floor = p_heads * (1.0 - p_heads);
    b.tally = kernels::tally_codes(codes, {k, default_orders(k), false});
    derive(b);
    return b;
}

nlohmann::ordered_json to_json(const BaselineTable& b)
{
    nlohmann::ordered_json j;
    j["k"] = b.k;
    j["mode"] = b.exact ? "exact" : "monte-carlo";
    j["samples"] = b.samples;
    if (!b.exact) j["seed"] = b.seed;
    j["p_heads"] = b.p_heads;
    j["heads_pmf"] = b.heads_pmf;
    j["alternation_pmf"] = b.alternation_pmf;
    j["alternation_mean"] = b.alternation_mean;
    j["alternation_sd"] = b.alternation_sd;
    j["expected_runs"] = std::vector<double>(b.expected_runs.begin() + 1, b.expected_runs.end());
    nlohmann::ordered_json ngrams = nlohmann::ordered_json::object();
    for (const auto& [order, frac] : b.ngram_fractions) ngrams[std::to_string(order)] = frac;
    j["ngram_fractions"] = ngrams;
    if (!b.exact) {
        j["heads_pmf_se"] = b.heads_pmf_se;
        j["alternation_mean_se"] = b.alternation_mean_se;
        j["expected_runs_se"] = std::vector<double>(b.expected_runs_se.begin() + 1, b.expected_runs_se.end());
    }
    j["mse_floor"] = b.mse_floor;
    return j;
}

// --- human registry -------------------------------------------------------

HumanBaselineRegistry::HumanBaselineRegistry()
{
    entries_[kAlternationRate] = {
        0.6, "Nickerson & Butler 2009; Budescu 1987; Falk & Konold 1997; Bar-Hillel et al. 2014"};
    entries_[kFirstFlipHeadsRate] = {0.8, "Bar-Hillel, Peer & Acquisti 2014"};
    entries_[kHeadsFirstGivenHeadsFirstPrompt] = {0.87, "Bar-Hillel, Peer & Acquisti 2014"};
    entries_[kTailsFirstGivenTailsFirstPrompt] = {0.67, "Bar-Hillel, Peer & Acquisti 2014"};
    entries_[kHumanMseFloor] = {0.24, "Kleinberg, Liang & Mullainathan 2017"};
}

const HumanConstant& HumanBaselineRegistry::at(const std::string& key) const
{
    auto it = entries_.find(key);
    if (it == entries_.end()) throw InvalidArgument("unknown human baseline '" + key + "'");
    return it->second;
}

void HumanBaselineRegistry::set(const std::string& key, HumanConstant constant)
{
    if (!entries_.contains(key)) throw DataError("unknown human baseline key '" + key + "'");
    if (constant.citation.empty()) throw DataError("human baseline '" + key + "' override requires a citation");
    const bool is_mse = key == kHumanMseFloor;
    const bool ok = is_mse ? (constant.value > 0.0 && constant.value <= 0.25)
                           : (constant.value >= 0.0 && constant.value <= 1.0);
    if (!ok || !std::isfinite(constant.value))
        throw DataError("human baseline '" + key + "' value " + std::to_string(constant.value) + " out of range");
    entries_[key] = std::move(constant);
}

void HumanBaselineRegistry::apply_overrides(const nlohmann::json& doc)
{
    const nlohmann::json& body = doc.contains("human_baselines") ? doc.at("human_baselines") : doc;
    if (!body.is_object()) throw DataError("human baseline document must be an object");
    for (const auto& [key, entry] : body.items()) {
        if (!entry.is_object() || !entry.contains("value") || !entry.at("value").is_number())
            throw DataError("human baseline '" + key + "' must be {\"value\": number, \"citation\": string}");
        HumanConstant c;
        c.value = entry.at("value").get<double>();
        if (entry.contains("citation")) {
            if (!entry.at("citation").is_string())
                throw DataError("human baseline '" + key + "' citation must be a string");
            c.citation = entry.at("citation").get<std::string>();
        }
        set(key, std::move(c));
    }
}

HumanBaselineRegistry load_human_baselines(const std::optional<std::filesystem::path>& path)
{
    HumanBaselineRegistry registry;
    if (!path) return registry;
    std::ifstream in(*path);
    if (!in) throw DataError("cannot open human baseline file " + path->string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed human baseline file " + path->string() + ": " + e.what());
    }
    registry.apply_overrides(doc);
    return registry;
}

nlohmann::ordered_json to_json(const HumanBaselineRegistry& registry)
{
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [key, c] : registry.entries()) j[key] = {{"value", c.value}, {"citation", c.citation}};
    return j;
}

} // namespace flipbench
