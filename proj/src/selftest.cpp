#include "flipbench/selftest.hpp"

#include "flipbench/error.hpp"
#include "flipbench/generators.hpp"
#include "flipbench/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace flipbench {

bool SelftestResult::passed() const
{
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const SelftestCheck& c) { return c.passed; });
}

namespace {

constexpr double kSigmas = 4.0;

std::string fmt(const char* f, double a, double b = 0.0)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

double binomial(int n, int k)
{
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

} // namespace

SelftestResult run_selftest(const SelftestOptions& options)
{
    if (options.samples < 100) throw InvalidArgument("selftest needs at least 100 samples");
    ReportOptions ro = options.report;
    ro.validate();
    const int k = ro.window;

    GeneratorSpec spec;
    spec.kind = GeneratorKind::Bernoulli;
    spec.length = static_cast<std::size_t>(k);
    spec.count = options.samples;
    spec.seed = options.seed;
    const auto seqs = generate(spec);
    const auto records = records_from_sequences(seqs);

    SelftestResult out;
    out.report = build_report(records, ro);
    out.document = to_json(out.report);
    auto& checks = out.checks;
    const auto add = [&](std::string name, bool ok, std::string detail) {
        checks.push_back({std::move(name), ok, std::move(detail)});
    };

    const auto& base = out.report.baseline;
    const auto& run_base = out.report.run_baseline;
    if (base.exact) {
        double worst = 0.0;
        for (int x = 0; x <= k; ++x)
            worst = std::max(worst, std::abs(base.heads_pmf[static_cast<std::size_t>(x)] - binomial(k, x) / std::ldexp(1.0, k)));
        add("baseline_heads_pmf", worst == 0.0, fmt("max |pmf - C(k,x)/2^k| = %.3g", worst));
        add("baseline_alternation_mean", base.alternation_mean == (k - 1) / 2.0,
            fmt("mean %.17g, expected %.17g", base.alternation_mean, (k - 1) / 2.0));
    }
    if (run_base.exact) {
        const int r = run_base.k;
        double worst = 0.0;
        for (int L = 1; L <= r; ++L) {
            const double closed = L < r ? (r - L + 3) / std::ldexp(1.0, L + 1) : std::ldexp(1.0, 1 - r);
            worst = std::max(worst, std::abs(run_base.expected_runs[static_cast<std::size_t>(L)] - closed));
        }
        add("baseline_run_closed_form", worst < 1e-12, fmt("max deviation %.3g", worst));
    }

    const auto ws = windows(seqs, static_cast<std::size_t>(k));
    std::vector<std::uint64_t> codes(ws.size());
    std::transform(ws.begin(), ws.end(), codes.begin(), [](const Window& w) { return pack(w.flips); });
    const kernels::TallyOptions topts{k, ro.ngram_orders, true};
    const auto serial = kernels::serial::tally_codes(codes, topts);
    add("kernel_parity", serial == kernels::omp::tally_codes(codes, topts),
        "serial and parallel tallies over " + std::to_string(codes.size()) + " windows");

    const auto& cell = out.report.cells.front();
    const double N = static_cast<double>(cell.windows);
    if (cell.stats_shortfall) {
        add("statistics_available", false, "too few windows for the battery");
        return out;
    }

    const double alt_tol = kSigmas * base.alternation_sd / std::sqrt(N);
    add("alternation_mean", std::abs(cell.alternations->mean - base.alternation_mean) <= alt_tol,
        fmt("mean %.6f, tolerance %.4f", cell.alternations->mean, alt_tol));

    bool ngram_ok = true;
    double ngram_worst = 0.0;
    for (const auto& t : cell.ngrams) {
        if (ro.ngram_mode != NGramMode::Window) break;
        const int slot = serial.ngram_slot(t.n);
        const double per_window = static_cast<double>(k - t.n + 1);
        for (std::size_t i = 0; i < t.counts.size(); ++i) {
            const double m = static_cast<double>(serial.ngrams[static_cast<std::size_t>(slot)][i]) / N;
            const double sq = static_cast<double>(serial.ngrams_sq[static_cast<std::size_t>(slot)][i]) / N;
            const double se = std::sqrt(std::max(sq - m * m, 0.0) / N) / per_window;
            const double dev = std::abs(t.fractions[i] - std::ldexp(1.0, -t.n));
            ngram_worst = std::max(ngram_worst, se > 0.0 ? dev / se : dev > 0.0 ? INFINITY : 0.0);
            if (dev > kSigmas * se) ngram_ok = false;
        }
    }
    add("ngram_fractions", ngram_ok, fmt("largest deviation %.2f SE", ngram_worst));

    double phi_worst = 0.0;
    bool phi_defined = true;
    for (int i = 1; i <= k; ++i)
        for (int j = 1; j <= k; ++j) {
            if (i == j) continue;
            const auto& v = cell.correlation_matrix->at(i, j);
            if (!v) phi_defined = false;
            else phi_worst = std::max(phi_worst, std::abs(*v));
        }
    const double phi_tol = kSigmas / std::sqrt(N);
    add("positional_correlation", phi_defined && phi_worst < phi_tol,
        fmt("max |phi| %.4f, tolerance %.4f", phi_worst, phi_tol));

    bool runs_ok = true;
    double runs_worst = 0.0;
    for (const auto& [L, ratio] : cell.run_ratios) {
        const auto l = static_cast<std::size_t>(L);
        const double se = run_base.expected_runs_sd[l] / run_base.expected_runs[l] / std::sqrt(N);
        runs_worst = std::max(runs_worst, std::abs(ratio - 1.0) / se);
        if (std::abs(ratio - 1.0) > kSigmas * se) runs_ok = false;
    }
    add("run_ratios", runs_ok, fmt("largest deviation %.2f SE", runs_worst));

    std::string set_flags;
    for (const auto& f : cell.flags)
        if (f.set) set_flags += (set_flags.empty() ? "" : ", ") + f.name;
    add("no_humanness_flags", set_flags.empty(), set_flags.empty() ? "none set" : "set: " + set_flags);

    if (ro.run_predictor) {
        if (!cell.predictor) {
            add("predictor_mse", false, "predictor did not run");
        } else {
            // Held-out MSE of a fair source is 0.25 plus an overfitting term
            // of roughly 0.25 * (features + 1) / training rows.
            const double features = static_cast<double>(FeatureVector::size_for(static_cast<std::size_t>(k - 1)));
            const double train = N * (ro.cv.folds - 1) / ro.cv.folds;
            const double tol = 0.01 + 0.25 * (features + 1.0) / train;
            const double mse = cell.predictor->mean_mse;
            add("predictor_mse", std::abs(mse - base.mse_floor) <= tol, fmt("mse %.6f, tolerance %.4f", mse, tol));
            add("objective_monotone", cell.predictor->model.objective_monotone,
                "final fit over " + std::to_string(cell.predictor->model.sweeps) + " sweeps");
        }
    }

    const auto again = to_json(build_report(records, ro));
    add("report_deterministic", again == out.document, "report rebuilt from identical records");
    return out;
}

} // namespace flipbench
