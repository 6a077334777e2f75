#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "markersim/errors.hpp"
#include "markersim/metrics.hpp"
#include "markersim/report.hpp"

using namespace markersim;
namespace fs = std::filesystem;

namespace {

const fs::path kReport10 = fs::path(MARKERSIM_FIXTURE_DIR) / "report10";

EpisodeRecord record(std::vector<Vec3> traj, std::optional<DetectionEvent> det,
                     Termination t = Termination::Detected) {
  EpisodeRecord r;
  r.scenario_id = "x";
  r.trajectory = std::move(traj);
  r.detection = det;
  r.termination = t;
  r.final_position = r.trajectory.back();
  r.path_xy_length = trajectory_xy_length(r.trajectory);
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const MetricsSummary& row(const std::vector<MetricsSummary>& rows, const std::string& method,
                          const std::string& map) {
  for (const auto& r : rows) {
    if (r.method == method && r.map == map) return r;
  }
  throw std::runtime_error("missing row " + method + "/" + map);
}

}  // namespace

TEST(Metrics, ClassifySuccessUsesReportedPosition) {
  const auto r = record({{0, 0, 20}}, DetectionEvent{0, {1.2, 1.6, 0}, DetectionTruth::TruePositive});
  const auto o = classify(r, {0, 0, 0});
  EXPECT_EQ(o.cls, OutcomeClass::Success);
  EXPECT_NEAR(o.nav_error, 2.0, 1e-12);
  EXPECT_DOUBLE_EQ(o.spl_term, 1.0);
}

TEST(Metrics, ClassifyFalseDetectionJustOutside) {
  const auto r = record({{0, 0, 20}}, DetectionEvent{0, {2.0 + 1e-9, 0, 0}, DetectionTruth::FalsePositive});
  const auto o = classify(r, {0, 0, 0});
  EXPECT_EQ(o.cls, OutcomeClass::FalseDetection);
  EXPECT_EQ(o.spl_term, 0.0);
}

TEST(Metrics, ClassifyFailUsesLastPosition) {
  const auto r = record({{0, 0, 20}, {3, 0, 20}}, std::nullopt, Termination::Collision);
  const auto o = classify(r, {0, 4, 0});
  EXPECT_EQ(o.cls, OutcomeClass::Fail);
  EXPECT_TRUE(o.collided);
  EXPECT_NEAR(o.nav_error, std::sqrt(9.0 + 16.0 + 400.0), 1e-12);
  EpisodeRecord empty;
  EXPECT_THROW(classify(empty, {0, 0, 0}), DataError);
}

TEST(Metrics, SplTermDetour) {
  // two legs of 2 and 4 m, straight-line displacement sqrt(20)
  const auto r = record({{0, 0, 20}, {2, 0, 20}, {2, 4, 20}, {9, 9, 20}},
                        DetectionEvent{2, {2, 4, 0}, DetectionTruth::TruePositive});
  EXPECT_NEAR(spl_term(r, {2, 4, 0}), std::sqrt(20.0) / 6.0, 1e-12);
  EXPECT_NEAR(spl_term(r, {2, 4, 0}), 0.745356, 1e-6);
}

TEST(Metrics, SplTermStraightPathIsOne) {
  const auto r = record({{0, 0, 20}, {2, 0, 20}, {4, 0, 20}},
                        DetectionEvent{2, {4, 0, 0}, DetectionTruth::TruePositive});
  EXPECT_DOUBLE_EQ(spl_term(r, {4, 0, 0}), 1.0);
}

TEST(Metrics, SplTermRejectsStepBeyondTrajectory) {
  const auto r = record({{0, 0, 20}}, DetectionEvent{3, {0, 0, 0}, DetectionTruth::TruePositive});
  EXPECT_THROW(spl_term(r, {0, 0, 0}), DataError);
}

TEST(Metrics, SummarizeInvariants) {
  Rng rng(3);
  std::vector<ScoredEpisode> eps;
  const char* maps[] = {"ModernCity", "PostSoviet", "UrbanDistrict"};
  for (int k = 0; k < 300; ++k) {
    EpisodeOutcome o;
    const int c = uniform_int(rng, 0, 2);
    o.cls = static_cast<OutcomeClass>(c);
    o.spl_term = o.cls == OutcomeClass::Success ? uniform(rng, 0.0, 1.0) : 0.0;
    o.nav_error = uniform(rng, 0.0, 30.0);
    o.collided = o.cls == OutcomeClass::Fail && uniform(rng, 0.0, 1.0) < 0.5;
    eps.push_back({k % 2 ? "A" : "B", maps[uniform_int(rng, 0, 2)], o});
  }
  const auto rows = summarize(eps);
  ASSERT_EQ(rows.size(), 8u);
  EXPECT_EQ(rows[3].method, "A");
  EXPECT_EQ(rows[3].map, kAvgRow);
  int total = 0;
  for (const auto& r : rows) {
    EXPECT_LE(r.spl, r.sr + 1e-9);
    EXPECT_LE(r.cr, 100.0 - r.sr - r.fd + 1e-9);
    EXPECT_GE(r.sr + r.fd, 0.0);
    EXPECT_LE(r.sr + r.fd, 100.0 + 1e-9);
    if (r.map != kAvgRow) total += r.n_episodes;
  }
  EXPECT_EQ(total, 300);
  // the Avg row is episode-weighted
  for (const std::string m : {"A", "B"}) {
    double sr = 0;
    int n = 0;
    for (const auto& r : rows) {
      if (r.method == m && r.map != kAvgRow) {
        sr += r.sr * r.n_episodes;
        n += r.n_episodes;
      }
    }
    EXPECT_NEAR(row(rows, m, kAvgRow).sr, sr / n, 1e-9);
  }
  EXPECT_THROW(summarize({}), DataError);
}

TEST(Factors, SingleSuccess) {
  const auto rep = factor_report("M", {{OutcomeClass::Success, 20.0, 0.5, {WeatherKind::Sunny, 0.0}}});
  ASSERT_EQ(rep.rows.size(), 1u);
  EXPECT_EQ(rep.rows[0].cls, OutcomeClass::Success);
  EXPECT_DOUBLE_EQ(rep.rows[0].mean_height, 20.0);
  EXPECT_DOUBLE_EQ(rep.rows[0].mean_time, 0.5);
  EXPECT_DOUBLE_EQ(rep.rows[0].sunny_pct, 100.0);
  EXPECT_DOUBLE_EQ(rep.rows[0].severity_pct, 0.0);
}

TEST(Factors, MeansAndSeverityModes) {
  const std::vector<FactorSample> s = {{OutcomeClass::Fail, 18.0, 0.2, {WeatherKind::Sunny, 0.0}},
                                       {OutcomeClass::Fail, 26.0, 0.6, {WeatherKind::Foggy, 0.3}}};
  const auto zero = factor_report("M", s);
  ASSERT_EQ(zero.rows.size(), 1u);
  EXPECT_DOUBLE_EQ(zero.rows[0].mean_height, 22.0);
  EXPECT_DOUBLE_EQ(zero.rows[0].mean_time, 0.4);
  EXPECT_DOUBLE_EQ(zero.rows[0].sunny_pct, 50.0);
  EXPECT_NEAR(zero.rows[0].severity_pct, 15.0, 1e-12);
  const auto nonsunny = factor_report("M", s, {false});
  EXPECT_NEAR(nonsunny.rows[0].severity_pct, 30.0, 1e-12);
}

TEST(Report, FixtureMatchesHandComputedValues) {
  const LoadedRecords loaded = load_records(kReport10);
  ASSERT_TRUE(loaded.errors.empty());
  ASSERT_EQ(loaded.records.size(), 10u);
  const auto bundle = build_report(loaded.records, read_manifest(kReport10 / "manifest.jsonl"));
  const auto& t = bundle.table;
  ASSERT_EQ(t.size(), 6u);

  const double ne_b = std::sqrt(404.0), ne_c = std::sqrt(74.0), ne_e = std::sqrt(708.0);
  const auto& s_mc = row(t, "Spiral2D", "ModernCity");
  EXPECT_NEAR(s_mc.sr, 100.0 / 3, 1e-9);
  EXPECT_NEAR(s_mc.ne, (0.5 + ne_b + ne_c) / 3, 1e-9);
  EXPECT_NEAR(s_mc.spl, 100.0 * std::sqrt(20.0) / 6.0 / 3, 1e-9);
  EXPECT_NEAR(s_mc.cr, 100.0 / 3, 1e-9);
  EXPECT_NEAR(s_mc.fd, 100.0 / 3, 1e-9);
  const auto& s_avg = row(t, "Spiral2D", kAvgRow);
  EXPECT_NEAR(s_avg.ne, (0.5 + ne_b + ne_c + 1.0 + ne_e) / 5, 1e-9);
  EXPECT_NEAR(s_avg.spl, 100.0 * (std::sqrt(20.0) / 6.0 + 1.0) / 5, 1e-9);

  const auto& z_mc = row(t, "Zigzag3D", "ModernCity");
  EXPECT_NEAR(z_mc.sr, 200.0 / 3, 1e-9);
  EXPECT_NEAR(z_mc.ne, (0.0 + 22.0 + 1.5) / 3, 1e-9);
  EXPECT_NEAR(z_mc.spl, 100.0 * (1.0 + std::sqrt(32.0) / 8.0) / 3, 1e-9);
  const auto& z_ud = row(t, "Zigzag3D", "UrbanDistrict");
  EXPECT_NEAR(z_ud.ne, (std::sqrt(349.0) + 3.0) / 2, 1e-9);
  EXPECT_DOUBLE_EQ(z_ud.cr, 50.0);
  EXPECT_DOUBLE_EQ(z_ud.fd, 50.0);

  ASSERT_EQ(bundle.factors.size(), 3u);
  EXPECT_EQ(bundle.factors.back().method, "All");
  const auto& all_success = bundle.factors.back().rows[0];
  EXPECT_EQ(all_success.n_episodes, 4);
  EXPECT_DOUBLE_EQ(all_success.mean_height, 20.5);
}

TEST(Report, GoldenTextOutput) {
  const fs::path out = fs::temp_directory_path() / "markersim_report10_test";
  fs::remove_all(out);
  std::ostringstream o, e;
  ASSERT_EQ(run_report(kReport10, std::nullopt, out, {}, o, e), 0) << e.str();
  EXPECT_EQ(slurp(out / "table.txt"), slurp(kReport10 / "table.txt"));
  EXPECT_EQ(slurp(out / "factors.txt"), slurp(kReport10 / "factors.txt"));
  for (const char* f : {"table.csv", "factors.csv", "summary.svg"}) EXPECT_TRUE(fs::exists(out / f)) << f;
  const std::string csv = slurp(out / "table.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
  fs::remove_all(out);
}

TEST(Report, UnknownScenarioIsDataError) {
  auto loaded = load_records(kReport10);
  loaded.records[0].scenario_id = "nowhere";
  EXPECT_THROW(build_report(loaded.records, read_manifest(kReport10 / "manifest.jsonl")), DataError);
}

TEST(Report, EmptyDirectoryFails) {
  const fs::path dir = fs::temp_directory_path() / "markersim_empty_records";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "manifest.jsonl") << "";
  std::ostringstream o, e;
  EXPECT_NE(run_report(dir, std::nullopt, dir / "out", {}, o, e), 0);
  EXPECT_FALSE(e.str().empty());
  fs::remove_all(dir);
}
