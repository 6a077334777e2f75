// Episode scoring (SR, NE, SPL, CR, FD) and the per-outcome factor report.
#pragma once

#include <string>
#include <vector>

#include "markersim/agent.hpp"
#include "markersim/scenario.hpp"

namespace markersim {

inline constexpr double kSuccessDistance = 2.0;

enum class OutcomeClass { Success, Fail, FalseDetection };

std::string_view to_string(OutcomeClass c);

struct EpisodeOutcome {
  OutcomeClass cls = OutcomeClass::Fail;
  double nav_error = 0.0;
  double spl_term = 0.0;
  bool collided = false;
};

/// Reference position is the reported detection if any, else the last
/// trajectory position. Success needs a detection within 2 m (3D).
EpisodeOutcome classify(const EpisodeRecord& record, const Vec3& marker);

/// l / max(l, p) for successful episodes (1 when l = 0), else 0. l is the xy
/// distance from the start to the drone at the detection step; p is the xy
/// path length up to that step.
double spl_term(const EpisodeRecord& record, const Vec3& marker);

/// One scored episode with its grouping keys.
struct ScoredEpisode {
  std::string method;
  std::string map;
  EpisodeOutcome outcome;
};

struct MetricsSummary {
  std::string method;
  std::string map;  // "Avg" for the episode-weighted aggregate row
  int n_episodes = 0;
  double sr = 0.0;   // %
  double ne = 0.0;   // m
  double spl = 0.0;  // %
  double cr = 0.0;   // %
  double fd = 0.0;   // %
};

inline constexpr const char* kAvgRow = "Avg";

/// Rows sorted by (method, map) with each method's Avg row after its maps.
std::vector<MetricsSummary> summarize(const std::vector<ScoredEpisode>& episodes);

struct FactorRow {
  OutcomeClass cls = OutcomeClass::Success;
  int n_episodes = 0;
  double mean_height = 0.0;  // initial altitude, m
  double mean_time = 0.0;
  double sunny_pct = 0.0;
  double severity_pct = 0.0;
};

struct FactorConfig {
  bool sunny_counts_as_zero = true;  // false: severity averaged over non-sunny episodes only
};

/// Scenario attributes joined to an outcome.
struct FactorSample {
  OutcomeClass cls = OutcomeClass::Fail;
  double initial_height = 0.0;
  double time_of_day = 0.0;
  WeatherSpec weather;
};

struct FactorReport {
  std::string method;  // "All" for the pooled report
  std::vector<FactorRow> rows;  // Success, Fail, FalseDetection; empty classes omitted
};

FactorReport factor_report(const std::string& method, const std::vector<FactorSample>& samples,
                           const FactorConfig& config = {});

}  // namespace markersim
