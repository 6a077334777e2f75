// Report generation: loads episode records, joins them to the suite manifest
// and renders the metrics and factor tables (text, CSV, SVG).
#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "markersim/metrics.hpp"
#include "markersim/records.hpp"
#include "markersim/scenario.hpp"

namespace markersim {

struct LoadedRecords {
  std::vector<EpisodeRecord> records;
  std::vector<std::string> errors;  // "<file>: <message>"
};

/// Reads every *.json under `dir` (recursively, sorted by path) except run_meta.json.
LoadedRecords load_records(const std::filesystem::path& dir);

/// Manifest lookup: explicit path, else the path stored in run_meta.json in
/// `dir` or its parent, else dir/manifest.jsonl.
std::filesystem::path resolve_manifest(const std::filesystem::path& dir,
                                       const std::optional<std::filesystem::path>& explicit_path);

struct ReportBundle {
  std::vector<MetricsSummary> table;
  std::vector<FactorReport> factors;  // one per method, then "All"
  FactorConfig factor_config;
};

/// Throws DataError for a record whose scenario is not in the manifest.
ReportBundle build_report(const std::vector<EpisodeRecord>& records,
                          const std::vector<ManifestEntry>& manifest,
                          const FactorConfig& factor_config = {});

std::string format_table(const std::vector<MetricsSummary>& rows);
std::string table_csv(const std::vector<MetricsSummary>& rows);
std::string format_factors(const std::vector<FactorReport>& reports, const FactorConfig& config);
std::string factors_csv(const std::vector<FactorReport>& reports);
/// Grouped bar chart of the Avg rows (SR, SPL, CR, FD per method).
std::string summary_svg(const std::vector<MetricsSummary>& rows);

/// Full report command. Writes table.txt, table.csv, factors.txt,
/// factors.csv and summary.svg into out_dir. Returns a process exit code.
int run_report(const std::filesystem::path& records_dir,
               const std::optional<std::filesystem::path>& manifest, const std::filesystem::path& out_dir,
               const FactorConfig& factor_config, std::ostream& out, std::ostream& err);

}  // namespace markersim
