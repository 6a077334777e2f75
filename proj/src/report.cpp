#include "markersim/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "markersim/errors.hpp"
#include "markersim/scene_io.hpp"

namespace markersim {

namespace fs = std::filesystem;

namespace {

std::string fixed(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width, bool left = true) {
  if (s.size() >= width) return s;
  return left ? s + std::string(width - s.size(), ' ') : std::string(width - s.size(), ' ') + s;
}

}  // namespace

LoadedRecords load_records(const fs::path& dir) {
  LoadedRecords out;
  if (!fs::is_directory(dir)) {
    out.errors.push_back(dir.string() + ": not a directory");
    return out;
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const fs::path& p = entry.path();
    if (p.extension() == ".json" && p.filename() != "run_meta.json") files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      out.records.push_back(read_record_file(f));
    } catch (const DataError& e) {
      out.errors.push_back(e.what());
    }
  }
  return out;
}

fs::path resolve_manifest(const fs::path& dir, const std::optional<fs::path>& explicit_path) {
  if (explicit_path) return *explicit_path;
  for (const fs::path& meta : {dir / "run_meta.json", dir.parent_path() / "run_meta.json"}) {
    if (!fs::exists(meta)) continue;
    try {
      const auto j = nlohmann::json::parse(read_file(meta));
      if (j.contains("manifest")) return fs::path(j["manifest"].get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw DataError(meta.string() + ": " + e.what());
    }
  }
  return dir / "manifest.jsonl";
}

ReportBundle build_report(const std::vector<EpisodeRecord>& records,
                          const std::vector<ManifestEntry>& manifest, const FactorConfig& factor_config) {
  std::map<std::string, const ManifestEntry*> by_id;
  for (const auto& e : manifest) by_id[e.scenario_id] = &e;

  std::vector<ScoredEpisode> scored;
  std::map<std::string, std::vector<FactorSample>> samples;
  for (const auto& r : records) {
    const auto it = by_id.find(r.scenario_id);
    if (it == by_id.end()) {
      throw DataError("record for scenario '" + r.scenario_id + "' (method " + r.method +
                      ") has no manifest entry");
    }
    const ManifestEntry& e = *it->second;
    const EpisodeOutcome o = classify(r, e.marker);
    scored.push_back({r.method, std::string(to_string(e.profile)), o});
    samples[r.method].push_back({o.cls, e.start.position.z, e.time_of_day, e.weather});
  }
  ReportBundle bundle;
  bundle.factor_config = factor_config;
  bundle.table = summarize(scored);
  std::vector<FactorSample> pooled;
  for (const auto& [method, s] : samples) {
    bundle.factors.push_back(factor_report(method, s, factor_config));
    pooled.insert(pooled.end(), s.begin(), s.end());
  }
  bundle.factors.push_back(factor_report("All", pooled, factor_config));
  return bundle;
}

std::string format_table(const std::vector<MetricsSummary>& rows) {
  std::ostringstream out;
  out << pad("Method", 10) << pad("Map", 15) << pad("N", 6, false) << pad("SR(%)", 9, false)
      << pad("NE(m)", 9, false) << pad("SPL(%)", 9, false) << pad("CR(%)", 9, false)
      << pad("FD(%)", 9, false) << '\n';
  for (const auto& r : rows) {
    out << pad(r.method, 10) << pad(r.map, 15) << pad(std::to_string(r.n_episodes), 6, false)
        << pad(fixed(r.sr), 9, false) << pad(fixed(r.ne), 9, false) << pad(fixed(r.spl), 9, false)
        << pad(fixed(r.cr), 9, false) << pad(fixed(r.fd), 9, false) << '\n';
  }
  return out.str();
}

std::string table_csv(const std::vector<MetricsSummary>& rows) {
  std::ostringstream out;
  out << "method,map,n,SR,NE,SPL,CR,FD\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.map << ',' << r.n_episodes << ',' << fixed(r.sr, 4) << ','
        << fixed(r.ne, 4) << ',' << fixed(r.spl, 4) << ',' << fixed(r.cr, 4) << ',' << fixed(r.fd, 4)
        << '\n';
  }
  return out.str();
}

std::string format_factors(const std::vector<FactorReport>& reports, const FactorConfig& config) {
  std::ostringstream out;
  out << "Severity: " << (config.sunny_counts_as_zero ? "sunny episodes counted as 0" : "non-sunny episodes only")
      << '\n';
  out << pad("Method", 10) << pad("Outcome", 9) << pad("N", 6, false) << pad("Height(m)", 11, false)
      << pad("Time", 8, false) << pad("Sunny(%)", 10, false) << pad("Severity(%)", 13, false) << '\n';
  for (const auto& rep : reports) {
    for (const auto& r : rep.rows) {
      out << pad(rep.method, 10) << pad(std::string(to_string(r.cls)), 9)
          << pad(std::to_string(r.n_episodes), 6, false) << pad(fixed(r.mean_height), 11, false)
          << pad(fixed(r.mean_time), 8, false) << pad(fixed(r.sunny_pct), 10, false)
          << pad(fixed(r.severity_pct), 13, false) << '\n';
    }
  }
  return out.str();
}

std::string factors_csv(const std::vector<FactorReport>& reports) {
  std::ostringstream out;
  out << "method,outcome,n,height,time,sunny,severity\n";
  for (const auto& rep : reports) {
    for (const auto& r : rep.rows) {
      out << rep.method << ',' << to_string(r.cls) << ',' << r.n_episodes << ','
          << fixed(r.mean_height, 4) << ',' << fixed(r.mean_time, 4) << ',' << fixed(r.sunny_pct, 4)
          << ',' << fixed(r.severity_pct, 4) << '\n';
    }
  }
  return out.str();
}

std::string summary_svg(const std::vector<MetricsSummary>& rows) {
  std::vector<const MetricsSummary*> avg;
  for (const auto& r : rows) {
    if (r.map == kAvgRow) avg.push_back(&r);
  }
  const char* names[] = {"SR", "SPL", "CR", "FD"};
  const char* colors[] = {"#4c72b0", "#55a868", "#c44e52", "#8172b2"};
  const int group_w = 120;
  const int bar_w = 22;
  const int plot_h = 200;
  const int width = 60 + group_w * static_cast<int>(std::max<std::size_t>(1, avg.size()));
  const int height = plot_h + 90;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<line x1=\"40\" y1=\"" << 20 + plot_h << "\" x2=\"" << width - 10 << "\" y2=\""
      << 20 + plot_h << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 100; tick += 25) {
    const int y = 20 + plot_h - tick * plot_h / 100;
    out << "<text x=\"35\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << tick << "</text>\n";
  }
  for (std::size_t g = 0; g < avg.size(); ++g) {
    const MetricsSummary& r = *avg[g];
    const double values[] = {r.sr, r.spl, r.cr, r.fd};
    const int x0 = 50 + static_cast<int>(g) * group_w;
    for (int k = 0; k < 4; ++k) {
      const double h = std::clamp(values[k], 0.0, 100.0) * plot_h / 100.0;
      out << "<rect x=\"" << x0 + k * bar_w << "\" y=\"" << fixed(20 + plot_h - h, 1) << "\" width=\""
          << bar_w - 2 << "\" height=\"" << fixed(h, 1) << "\" fill=\"" << colors[k] << "\"/>\n";
    }
    out << "<text x=\"" << x0 + 2 * bar_w << "\" y=\"" << 38 + plot_h << "\" text-anchor=\"middle\">"
        << r.method << "</text>\n";
  }
  for (int k = 0; k < 4; ++k) {
    out << "<rect x=\"" << 50 + k * 60 << "\" y=\"" << 55 + plot_h << "\" width=\"10\" height=\"10\" fill=\""
        << colors[k] << "\"/><text x=\"" << 64 + k * 60 << "\" y=\"" << 64 + plot_h << "\">" << names[k]
        << " (%)</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

int run_report(const fs::path& records_dir, const std::optional<fs::path>& manifest,
               const fs::path& out_dir, const FactorConfig& factor_config, std::ostream& out,
               std::ostream& err) {
  const LoadedRecords loaded = load_records(records_dir);
  if (!loaded.errors.empty()) {
    for (const auto& e : loaded.errors) err << "invalid record: " << e << '\n';
    return 2;
  }
  if (loaded.records.empty()) {
    err << "no records found in " << records_dir.string() << '\n';
    return 1;
  }
  try {
    const auto entries = read_manifest(resolve_manifest(records_dir, manifest));
    const ReportBundle bundle = build_report(loaded.records, entries, factor_config);
    const std::string table = format_table(bundle.table);
    const std::string factors = format_factors(bundle.factors, factor_config);
    fs::create_directories(out_dir);
    write_file_atomic(out_dir / "table.txt", table);
    write_file_atomic(out_dir / "table.csv", table_csv(bundle.table));
    write_file_atomic(out_dir / "factors.txt", factors);
    write_file_atomic(out_dir / "factors.csv", factors_csv(bundle.factors));
    write_file_atomic(out_dir / "summary.svg", summary_svg(bundle.table));
    out << table << '\n' << factors;
  } catch (const DataError& e) {
    err << "report failed: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace markersim
