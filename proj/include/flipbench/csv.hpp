#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <string>

namespace flipbench {

/// CSV tables rendered from a report document, keyed by relative path.
/// Top level: heads_proportion.csv, proportion_matrix.csv, primacy.csv,
/// mse_series.csv, cells.csv. Per cell, under cells/cell_NNN/:
/// heads_histogram.csv, alternation_histogram.csv, run_ratios.csv,
/// ngrams.csv, correlation.csv, correlation_matrix.csv. Cells without enough
/// data get a one-line insufficient_data file in place of each table.
std::map<std::string, std::string> render_csv_bundle(const nlohmann::ordered_json& report_doc);

/// Writes the bundle under `dir`, creating directories as needed.
void write_csv_bundle(const nlohmann::ordered_json& report_doc, const std::filesystem::path& dir);

/// Pretty-printed document plus trailing newline.
std::string render_report_json(const nlohmann::ordered_json& report_doc);
void write_report_json(const nlohmann::ordered_json& report_doc, const std::filesystem::path& path);

/// Reads a report document back. Throws DataError on I/O or parse failure.
nlohmann::ordered_json read_report_json(const std::filesystem::path& path);

} // namespace flipbench
