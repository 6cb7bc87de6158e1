#pragma once

#include "flipbench/report.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace flipbench {

// Bernoulli self-consistency suite: `samples` independent fair windows are
// generated from `seed`, run through the full battery and predictor, and
// every result is checked against the i.i.d. baseline. Statistical checks
// allow 4 standard errors.
struct SelftestOptions {
    std::uint64_t seed = 7;
    std::uint64_t samples = 10000;
    ReportOptions report;
};

struct SelftestCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct SelftestResult {
    std::vector<SelftestCheck> checks;
    Report report;
    nlohmann::ordered_json document;

    bool passed() const;
};

SelftestResult run_selftest(const SelftestOptions& options);

} // namespace flipbench
