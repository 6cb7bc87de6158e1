#include "flipbench/report.hpp"

#include "flipbench/collector.hpp"
#include "flipbench/digest.hpp"
#include "flipbench/error.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <set>

namespace flipbench {

using ojson = nlohmann::ordered_json;

void Thresholds::validate() const
{
    if (!(se_multiplier >= 0.0)) throw InvalidArgument("se_multiplier must be >= 0");
    if (!(first_flip_cutoff >= 0.0 && first_flip_cutoff <= 1.0))
        throw InvalidArgument("first_flip_cutoff must lie in [0, 1]");
    if (min_windows_stats < 2) throw InvalidArgument("min_windows_stats must be >= 2");
    if (predictor_windows_per_fold < 2) throw InvalidArgument("predictor_windows_per_fold must be >= 2");
}

std::string_view to_string(BaselineMode mode) noexcept
{
    return mode == BaselineMode::Exact ? "exact" : "monte-carlo";
}

BaselineMode baseline_mode_from_string(std::string_view s)
{
    if (s == "exact") return BaselineMode::Exact;
    if (s == "monte-carlo" || s == "mc") return BaselineMode::MonteCarlo;
    throw InvalidArgument("unknown baseline mode '" + std::string(s) + "' (expected exact or monte-carlo)");
}

std::string_view to_string(NGramMode mode) noexcept
{
    return mode == NGramMode::Window ? "window" : "sequence";
}

NGramMode ngram_mode_from_string(std::string_view s)
{
    if (s == "window") return NGramMode::Window;
    if (s == "sequence") return NGramMode::Sequence;
    throw InvalidArgument("unknown n-gram mode '" + std::string(s) + "' (expected window or sequence)");
}

ReportOptions::ReportOptions()
{
    for (const auto& p : default_plan().prompts)
        if (p.order) prompt_orders[p.id] = *p.order;
}

void ReportOptions::validate() const
{
    if (window < 2 || window > 64) throw InvalidArgument("window length must lie in 2..64");
    if (run_window < 1 || run_window > window) throw InvalidArgument("run window must lie in 1..window");
    if (baseline_mode == BaselineMode::Exact && window > kMaxExactWindow)
        throw InvalidArgument("exact baselines support windows up to " + std::to_string(kMaxExactWindow) +
                              "; use the monte-carlo baseline");
    if (baseline_mode == BaselineMode::MonteCarlo && baseline_samples < 1000)
        throw InvalidArgument("monte-carlo baseline needs at least 1000 samples");
    for (int n : ngram_orders) {
        if (n < 1 || n > 20) throw InvalidArgument("n-gram order " + std::to_string(n) + " out of range 1..20");
        if (ngram_mode == NGramMode::Window && n > window)
            throw InvalidArgument("n-gram order " + std::to_string(n) + " exceeds the window length");
    }
    for (const auto& [n, frac] : human_ngram_fractions) {
        if (n < 1 || n > 20 || frac.size() != (std::size_t{1} << n))
            throw InvalidArgument("human n-gram reference for order " + std::to_string(n) + " needs 2^n entries");
        for (double f : frac)
            if (!(f >= 0.0 && f <= 1.0)) throw InvalidArgument("human n-gram fractions must lie in [0, 1]");
    }
    cv.validate();
    thresholds.validate();
}

ojson to_json(const ReportOptions& o)
{
    ojson prompt_orders = ojson::object();
    for (const auto& [id, order] : o.prompt_orders) prompt_orders[id] = to_string(order);
    ojson human_ngrams = ojson::object();
    for (const auto& [n, frac] : o.human_ngram_fractions) human_ngrams[std::to_string(n)] = frac;
    return {
        {"window", o.window},
        {"run_window", o.run_window},
        {"ngram_orders", o.ngram_orders},
        {"ngram_mode", to_string(o.ngram_mode)},
        {"include_partial", o.include_partial},
        {"baseline",
         {{"mode", to_string(o.baseline_mode)}, {"samples", o.baseline_samples}, {"seed", o.baseline_seed}}},
        {"run_predictor", o.run_predictor},
        {"predictor",
         {{"folds", o.cv.folds},
          {"lambda_grid", o.cv.lambda_grid},
          {"grid_size", o.cv.grid_size},
          {"grid_ratio", o.cv.grid_ratio},
          {"seed", o.cv.seed},
          {"tolerance", o.cv.tolerance},
          {"max_sweeps", o.cv.max_sweeps}}},
        {"thresholds",
         {{"se_multiplier", o.thresholds.se_multiplier},
          {"first_flip_cutoff", o.thresholds.first_flip_cutoff},
          {"min_windows_stats", o.thresholds.min_windows_stats},
          {"predictor_windows_per_fold", o.thresholds.predictor_windows_per_fold}}},
        {"human_baselines", to_json(o.human)},
        {"human_ngram_fractions", human_ngrams},
        {"prompt_orders", prompt_orders},
    };
}

const FlagResult& StatReport::flag(const std::string& name) const
{
    for (const auto& f : flags)
        if (f.name == name) return f;
    throw InvalidArgument("no flag named '" + name + "'");
}

bool StatReport::any_flag() const
{
    return std::any_of(flags.begin(), flags.end(), [](const FlagResult& f) { return f.set; });
}

namespace {

BaselineTable make_baseline(int k, const ReportOptions& o)
{
    if (o.baseline_mode == BaselineMode::Exact) return exact_baseline(k);
    return monte_carlo_baseline(k, o.baseline_samples, o.baseline_seed);
}

// Standard error of the mean of per-window values, treating windows cut from
// one parent sequence as a single cluster.
double cluster_se(const std::vector<double>& values, const std::vector<std::size_t>& parents)
{
    const auto n = static_cast<double>(values.size());
    if (values.empty()) return 0.0;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    std::map<std::size_t, double> sums;
    for (std::size_t i = 0; i < values.size(); ++i) sums[parents[i]] += values[i] - mean;
    const auto g = static_cast<double>(sums.size());
    if (sums.size() < 2) return 0.0;
    double ss = 0.0;
    for (const auto& [p, s] : sums) ss += s * s;
    return std::sqrt(g / (g - 1.0) * ss) / n;
}

double naive_se(const std::vector<double>& values)
{
    const auto n = static_cast<double>(values.size());
    if (values.size() < 2) return 0.0;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / (n - 1.0) / n);
}

double expected_ngram(const BaselineTable& b, int n, std::size_t index)
{
    if (auto it = b.ngram_fractions.find(n); it != b.ngram_fractions.end()) return it->second[index];
    double e = 1.0;
    for (int j = 0; j < n; ++j) e *= ((index >> j) & 1U) ? b.p_heads : 1.0 - b.p_heads;
    return e;
}

StatReport build_cell(const CellKey& key, std::vector<const CollectionRecord*> recs, const ReportOptions& o,
                      const BaselineTable& base, const BaselineTable& run_base)
{
    StatReport c;
    c.cell = key;
    if (auto it = o.prompt_orders.find(key.prompt_id); it != o.prompt_orders.end()) c.order = it->second;

    std::stable_sort(recs.begin(), recs.end(),
                     [](const CollectionRecord* a, const CollectionRecord* b) { return a->replicate < b->replicate; });

    std::vector<FlipSequence> seqs;
    for (const auto* r : recs) {
        ++c.yield.records;
        switch (r->kind) {
        case RecordKind::Parsed: ++c.yield.parsed; break;
        case RecordKind::Partial: ++c.yield.partial; break;
        case RecordKind::Refusal: ++c.yield.refusal; break;
        case RecordKind::Unparseable: ++c.yield.unparseable; break;
        case RecordKind::Error: ++c.yield.error; break;
        }
        const bool usable = r->kind == RecordKind::Parsed || (o.include_partial && r->kind == RecordKind::Partial);
        if (usable && !r->flips.empty()) seqs.push_back(r->sequence());
    }
    c.yield.sequences = seqs.size();
    for (const auto& s : seqs)
        if (s.flips.front() == Flip::Heads) ++c.first_heads;
    if (!seqs.empty()) c.heads_proportion = static_cast<double>(c.first_heads) / static_cast<double>(seqs.size());

    const auto k = static_cast<std::size_t>(o.window);
    const std::vector<Window> ws = windows(seqs, k);
    c.windows = ws.size();
    {
        std::set<std::size_t> ps;
        for (const auto& w : ws) ps.insert(w.parent);
        c.parents = ps.size();
    }

    const double z = o.thresholds.se_multiplier;
    const double N = static_cast<double>(c.windows);

    if (c.windows < o.thresholds.min_windows_stats) {
        c.stats_shortfall = Shortfall{"windows", o.thresholds.min_windows_stats, c.windows};
    } else {
        const bool window_ngrams = o.ngram_mode == NGramMode::Window;
        const auto tally = tally_windows(ws, window_ngrams ? o.ngram_orders : std::vector<int>{}, true);
        c.heads = heads_count_histogram(tally);
        c.alternations = alternation_histogram(tally);
        c.correlation = positional_correlation(tally, o.window);
        c.correlation_matrix = correlation_matrix(tally);
        c.runs = run_length_stats(tally_prefixes(ws, static_cast<std::size_t>(o.run_window)));
        c.run_ratios = run_ratio(*c.runs, run_base);
        for (int n : o.ngram_orders)
            c.ngrams.push_back(window_ngrams ? ngram_table(tally, n) : ngram_fractions(std::span(seqs), n));

        const std::size_t balance_at = (k + 1) / 2;
        std::vector<double> alt(ws.size()), bal(ws.size()), longruns(ws.size());
        std::vector<std::size_t> parents(ws.size());
        for (std::size_t i = 0; i < ws.size(); ++i) {
            const auto& f = ws[i].flips;
            std::size_t a = 0, h = 0;
            for (std::size_t j = 0; j < f.size(); ++j) {
                if (f[j] == Flip::Heads) ++h;
                if (j + 1 < f.size() && f[j] != f[j + 1]) ++a;
            }
            alt[i] = static_cast<double>(a);
            bal[i] = h == balance_at ? 1.0 : 0.0;
            std::uint64_t lr = 0;
            for (const auto& [L, n] : count_maximal_runs(std::span(f).first(static_cast<std::size_t>(o.run_window))))
                if (L >= 3) lr += n;
            longruns[i] = static_cast<double>(lr);
            parents[i] = ws[i].parent;
        }
        c.alternation_se = std::max(cluster_se(alt, parents), base.alternation_sd / std::sqrt(N));
        const double p0 = base.heads_pmf[balance_at];
        c.balance_se = std::max(cluster_se(bal, parents), std::sqrt(p0 * (1.0 - p0) / N));

        double expected_long = 0.0;
        for (int L = 3; L <= o.run_window; ++L) expected_long += run_base.expected_runs[static_cast<std::size_t>(L)];
        if (expected_long > 0.0) {
            double observed = 0.0;
            for (double v : longruns) observed += v;
            c.long_run_ratio = observed / (N * expected_long);
            c.long_run_ratio_se = std::max(cluster_se(longruns, parents), naive_se(longruns)) / expected_long;
        }
    }

    const std::uint64_t needed = static_cast<std::uint64_t>(o.cv.folds) * o.thresholds.predictor_windows_per_fold;
    if (o.run_predictor) {
        if (c.windows < needed) {
            c.predictor_shortfall = Shortfall{"windows", needed, c.windows};
        } else if (c.parents < static_cast<std::uint64_t>(o.cv.folds)) {
            c.predictor_shortfall = Shortfall{"parent sequences", static_cast<std::uint64_t>(o.cv.folds), c.parents};
        } else {
            c.predictor = cross_validated_mse(ws, o.cv);
            const double human = o.human.value(HumanBaselineRegistry::kHumanMseFloor);
            if (base.mse_floor > human) c.gap_ratio = gap_ratio(c.predictor->mean_mse, human, base.mse_floor);
        }
    }

    // Flags.
    const auto stats_flag = [&](const char* name, std::string rule) {
        FlagResult f;
        f.name = name;
        f.rule = std::move(rule);
        f.insufficient = c.stats_shortfall;
        return f;
    };
    const std::string zs = nlohmann::json(z).dump();

    FlagResult excess = stats_flag("excess_alternation", "mean alternations > baseline mean + " + zs + " SE");
    FlagResult aversion = stats_flag("run_aversion", "run ratio < 1 for every L >= 3, and pooled L >= 3 ratio < 1 - " +
                                                         zs + " SE");
    FlagResult balance = stats_flag("over_balance", "heads-count mass at ceil(k/2) > baseline mass + " + zs + " SE");
    FlagResult first;
    first.name = "first_flip_bias";
    first.rule = "first-flip heads proportion > cutoff";
    first.threshold = o.thresholds.first_flip_cutoff;
    if (c.heads_proportion) {
        first.value = *c.heads_proportion;
        first.set = first.value > first.threshold;
    } else {
        first.insufficient = Shortfall{"sequences", 1, 0};
    }

    if (!c.stats_shortfall) {
        excess.value = c.alternations->mean;
        excess.threshold = base.alternation_mean + z * c.alternation_se;
        excess.set = excess.value > excess.threshold;

        const std::size_t at = (k + 1) / 2;
        balance.value = c.heads->mass[at];
        balance.threshold = base.heads_pmf[at] + z * c.balance_se;
        balance.set = balance.value > balance.threshold;

        if (o.run_window < 3) {
            aversion.insufficient = Shortfall{"run window length", 3, static_cast<std::uint64_t>(o.run_window)};
        } else {
            bool all_below = true;
            for (const auto& [L, ratio] : c.run_ratios)
                if (L >= 3 && !(ratio < 1.0)) all_below = false;
            aversion.value = c.long_run_ratio;
            aversion.threshold = 1.0 - z * c.long_run_ratio_se;
            aversion.set = all_below && aversion.value < aversion.threshold;
        }
    }
    c.flags = {excess, aversion, first, balance};
    return c;
}

} // namespace

Report build_report(std::span<const CollectionRecord> records, const ReportOptions& options)
{
    if (records.empty()) throw InvalidArgument("build_report: no records");
    options.validate();

    Report report;
    report.version = FLIPBENCH_VERSION;
    report.options = options;
    report.baseline = make_baseline(options.window, options);
    report.run_baseline = make_baseline(options.run_window, options);

    std::map<CellKey, std::vector<const CollectionRecord*>> groups;
    for (const auto& r : records) groups[r.cell()].push_back(&r);

    std::vector<std::pair<CellKey, std::vector<const CollectionRecord*>>> cells(groups.begin(), groups.end());
    report.cells.resize(cells.size());
    std::vector<std::exception_ptr> failures(cells.size());

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(cells.size()); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        try {
            report.cells[idx] =
                build_cell(cells[idx].first, cells[idx].second, options, report.baseline, report.run_baseline);
        } catch (...) {
            failures[idx] = std::current_exception();
        }
    }
    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);

    // Prompt-order contingency per model, pooled across temperatures.
    std::map<std::string, std::pair<std::vector<CollectionRecord>, std::vector<CollectionRecord>>> by_model;
    for (const auto& r : records) {
        auto it = options.prompt_orders.find(r.prompt_id);
        if (it == options.prompt_orders.end()) continue;
        auto& slot = by_model[r.model];
        (it->second == PromptOrder::HeadsFirstPrompt ? slot.first : slot.second).push_back(r);
    }
    for (const auto& [model, lists] : by_model) {
        PrimacySummary s;
        s.model = model;
        try {
            s.result = primacy_table(lists.first, lists.second);
        } catch (const InsufficientData& e) {
            s.insufficient = e.what();
        }
        report.primacy.push_back(std::move(s));
    }

    report.config_digest = sha256_hex(to_json(options).dump());
    std::string inputs;
    for (const auto& r : records) inputs += to_jsonl_line(r) + "\n";
    report.input_digest = sha256_hex(inputs);
    const ojson baselines = {{"window", to_json(report.baseline)}, {"run_window", to_json(report.run_baseline)}};
    report.baseline_digest = sha256_hex(baselines.dump());
    return report;
}

namespace {

ojson opt(const std::optional<double>& v)
{
    return v ? ojson(*v) : ojson(nullptr);
}

ojson shortfall_json(const Shortfall& s)
{
    return {{"insufficient_data", {{"unit", s.unit}, {"required", s.required}, {"available", s.available}}}};
}

ojson cell_key_json(const CellKey& k)
{
    return {{"model", k.model}, {"prompt_id", k.prompt_id}, {"temperature", k.temperature}};
}

std::vector<double> deltas(const std::vector<double>& a, const std::vector<double>& b)
{
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return d;
}

ojson cell_json(const StatReport& c, const Report& r)
{
    const auto& base = r.baseline;
    const auto& run_base = r.run_baseline;
    const auto& human = r.options.human;
    ojson j;
    j["cell"] = cell_key_json(c.cell);
    j["prompt_order"] = c.order ? ojson(to_string(*c.order)) : ojson(nullptr);
    j["yield"] = {{"records", c.yield.records},         {"parsed", c.yield.parsed},
                  {"partial", c.yield.partial},         {"refusal", c.yield.refusal},
                  {"unparseable", c.yield.unparseable}, {"error", c.yield.error},
                  {"sequences", c.yield.sequences}};
    if (c.heads_proportion)
        j["heads_proportion"] = {{"position", 0},
                                 {"sequences", c.yield.sequences},
                                 {"heads", c.first_heads},
                                 {"value", *c.heads_proportion}};
    else
        j["heads_proportion"] = shortfall_json({"sequences", 1, 0});
    j["windows"] = {{"length", r.options.window}, {"count", c.windows}, {"parents", c.parents}};

    if (c.stats_shortfall) {
        const ojson marker = shortfall_json(*c.stats_shortfall);
        for (const char* field : {"heads_histogram", "alternation_histogram", "runs", "ngrams", "correlation",
                                  "correlation_matrix"})
            j[field] = marker;
    } else {
        const auto& h = *c.heads;
        j["heads_histogram"] = {{"k", h.k},
                                {"windows", h.windows},
                                {"counts", h.counts},
                                {"mass", h.mass},
                                {"mean", h.mean},
                                {"expected_mass", base.heads_pmf},
                                {"expected_mean", base.heads_mean()}};
        const auto& a = *c.alternations;
        j["alternation_histogram"] = {{"k", a.k},
                                      {"windows", a.windows},
                                      {"counts", a.counts},
                                      {"mass", a.mass},
                                      {"mean", a.mean},
                                      {"se", c.alternation_se},
                                      {"expected_mass", base.alternation_pmf},
                                      {"expected_mean", base.alternation_mean}};
        ojson runs = ojson::array();
        for (int L = 1; L <= c.runs->window_length; ++L) {
            const double per_window = run_base.expected_runs[static_cast<std::size_t>(L)];
            ojson row = {{"length", L},
                         {"count", c.runs->count(L)},
                         {"expected", per_window * static_cast<double>(c.runs->window_count)}};
            auto it = c.run_ratios.find(L);
            row["ratio"] = it != c.run_ratios.end() ? ojson(it->second) : ojson(nullptr);
            runs.push_back(std::move(row));
        }
        j["runs"] = {{"window_length", c.runs->window_length},
                     {"windows", c.runs->window_count},
                     {"by_length", runs},
                     {"long_run_ratio", c.long_run_ratio},
                     {"long_run_ratio_se", c.long_run_ratio_se}};
        ojson ngrams = ojson::array();
        for (const auto& t : c.ngrams) {
            ojson rows = ojson::array();
            for (std::size_t i = 0; i < t.counts.size(); ++i) {
                const double expected = expected_ngram(base, t.n, i);
                ojson row = {{"ngram", NGramTable::key(t.n, i)},
                             {"count", t.counts[i]},
                             {"fraction", t.fractions[i]},
                             {"expected", expected},
                             {"delta", t.fractions[i] - expected}};
                if (auto hit = r.options.human_ngram_fractions.find(t.n); hit != r.options.human_ngram_fractions.end())
                    row["human"] = hit->second[i];
                rows.push_back(std::move(row));
            }
            ngrams.push_back({{"n", t.n}, {"total", t.total}, {"rows", rows}});
        }
        j["ngrams"] = {{"mode", to_string(r.options.ngram_mode)}, {"tables", ngrams}};
        ojson phi = ojson::array();
        for (const auto& e : c.correlation->entries) phi.push_back(opt(e));
        j["correlation"] = {{"target", c.correlation->target}, {"phi", phi}};
        ojson matrix = ojson::array();
        for (int i = 1; i <= c.correlation_matrix->k; ++i) {
            ojson row = ojson::array();
            for (int jj = 1; jj <= c.correlation_matrix->k; ++jj) row.push_back(opt(c.correlation_matrix->at(i, jj)));
            matrix.push_back(std::move(row));
        }
        j["correlation_matrix"] = {{"k", c.correlation_matrix->k}, {"phi", matrix}};
    }

    if (c.predictor) {
        ojson p = to_json(*c.predictor);
        p["gap_ratio"] = opt(c.gap_ratio);
        j["predictor"] = std::move(p);
    } else if (c.predictor_shortfall) {
        j["predictor"] = shortfall_json(*c.predictor_shortfall);
    } else {
        j["predictor"] = {{"skipped", true}};
    }

    ojson d = ojson::object();
    if (c.heads_proportion) {
        d["first_flip_heads"] = *c.heads_proportion - base.p_heads;
        d["first_flip_heads_vs_human"] =
            *c.heads_proportion - human.value(HumanBaselineRegistry::kFirstFlipHeadsRate);
    }
    if (!c.stats_shortfall) {
        d["heads_mean"] = c.heads->mean - base.heads_mean();
        d["heads_mass"] = deltas(c.heads->mass, base.heads_pmf);
        d["alternation_mean"] = c.alternations->mean - base.alternation_mean;
        d["alternation_mass"] = deltas(c.alternations->mass, base.alternation_pmf);
        const double rate = c.alternations->mean / static_cast<double>(r.options.window - 1);
        d["alternation_rate_vs_human"] = rate - human.value(HumanBaselineRegistry::kAlternationRate);
        ojson rr = ojson::object();
        for (const auto& [L, ratio] : c.run_ratios) rr[std::to_string(L)] = ratio - 1.0;
        d["run_ratio"] = rr;
    }
    if (c.predictor) {
        d["mse"] = c.predictor->mean_mse - base.mse_floor;
        d["mse_vs_human"] = c.predictor->mean_mse - human.value(HumanBaselineRegistry::kHumanMseFloor);
    }
    j["baseline_deltas"] = d;

    ojson flags = ojson::object();
    for (const auto& f : c.flags) {
        ojson fj;
        if (f.insufficient) {
            fj = shortfall_json(*f.insufficient);
            fj["set"] = false;
        } else {
            fj["set"] = f.set;
            fj["value"] = f.value;
            fj["threshold"] = f.threshold;
        }
        fj["rule"] = f.rule;
        flags[f.name] = std::move(fj);
    }
    j["flags"] = flags;
    return j;
}

} // namespace

ojson to_json(const Report& r)
{
    ojson doc;
    doc["tool"] = "flipbench";
    doc["version"] = r.version;
    doc["feature_set_version"] = kFeatureSetVersion;
    doc["config_digest"] = r.config_digest;
    doc["input_digest"] = r.input_digest;
    doc["baseline_digest"] = r.baseline_digest;
    doc["options"] = to_json(r.options);
    doc["baselines"] = {{"window", to_json(r.baseline)}, {"run_window", to_json(r.run_baseline)}};

    ojson cells = ojson::array();
    for (const auto& c : r.cells) cells.push_back(cell_json(c, r));
    doc["cells"] = std::move(cells);

    ojson proportions = ojson::array();
    std::set<std::string> models;
    std::map<std::pair<std::string, double>, std::map<std::string, double>> matrix;
    for (const auto& c : r.cells) {
        models.insert(c.cell.model);
        proportions.push_back({{"model", c.cell.model},
                               {"prompt_id", c.cell.prompt_id},
                               {"temperature", c.cell.temperature},
                               {"sequences", c.yield.sequences},
                               {"heads", c.first_heads},
                               {"proportion", opt(c.heads_proportion)}});
        auto& row = matrix[{c.cell.prompt_id, c.cell.temperature}];
        if (c.heads_proportion) row[c.cell.model] = *c.heads_proportion;
    }
    ojson matrix_rows = ojson::array();
    for (const auto& [key, row] : matrix) {
        ojson values = ojson::array();
        for (const auto& m : models) {
            auto it = row.find(m);
            values.push_back(it != row.end() ? ojson(it->second) : ojson(nullptr));
        }
        matrix_rows.push_back({{"prompt_id", key.first}, {"temperature", key.second}, {"values", values}});
    }

    ojson primacy = ojson::array();
    const auto& human = r.options.human;
    for (const auto& p : r.primacy) {
        ojson pj = {{"model", p.model}};
        if (p.result) {
            const auto& t = p.result->table.counts;
            const auto row_total = [&](int i) { return static_cast<double>(t[i][0] + t[i][1]); };
            pj["heads_first_prompt"] = {{"heads_first", t[0][0]}, {"tails_first", t[0][1]}};
            pj["tails_first_prompt"] = {{"heads_first", t[1][0]}, {"tails_first", t[1][1]}};
            pj["proportion_heads_given_heads_first_prompt"] = static_cast<double>(t[0][0]) / row_total(0);
            pj["proportion_tails_given_tails_first_prompt"] = static_cast<double>(t[1][1]) / row_total(1);
            pj["human_heads_given_heads_first_prompt"] =
                human.value(HumanBaselineRegistry::kHeadsFirstGivenHeadsFirstPrompt);
            pj["human_tails_given_tails_first_prompt"] =
                human.value(HumanBaselineRegistry::kTailsFirstGivenTailsFirstPrompt);
            pj["expected"] = {{p.result->expected[0][0], p.result->expected[0][1]},
                              {p.result->expected[1][0], p.result->expected[1][1]}};
            pj["chi_square"] = p.result->chi_square;
            pj["critical"] = kChiSquareCritical1Dof;
            pj["significant"] = p.result->significant;
            pj["low_expected"] = p.result->low_expected;
        } else {
            pj["insufficient_data"] = *p.insufficient;
        }
        primacy.push_back(std::move(pj));
    }

    ojson mse = ojson::array();
    ojson gaps = ojson::array();
    const double human_mse = human.value(HumanBaselineRegistry::kHumanMseFloor);
    for (const auto& c : r.cells) {
        ojson row = cell_key_json(c.cell);
        row["windows"] = c.windows;
        row["lambda"] = c.predictor ? ojson(c.predictor->best_lambda) : ojson(nullptr);
        row["mse"] = c.predictor ? ojson(c.predictor->mean_mse) : ojson(nullptr);
        row["gap_ratio"] = opt(c.gap_ratio);
        mse.push_back(std::move(row));
        if (c.predictor && c.gap_ratio) {
            ojson g = cell_key_json(c.cell);
            g["mse"] = c.predictor->mean_mse;
            g["human_mse"] = human_mse;
            g["random_mse"] = r.baseline.mse_floor;
            g["gap_ratio"] = *c.gap_ratio;
            gaps.push_back(std::move(g));
        }
    }

    doc["tables"] = {
        {"heads_proportion", proportions},
        {"proportion_matrix", {{"models", models}, {"rows", matrix_rows}}},
        {"primacy", primacy},
        {"mse_series", mse},
        {"gap_ratios", gaps},
    };
    return doc;
}

std::string report_digest(const ojson& report_doc)
{
    return sha256_hex(report_doc.dump());
}

} // namespace flipbench
