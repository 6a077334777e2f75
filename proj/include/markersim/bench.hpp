// Benchmark harness: suite generation, method execution over a suite with a
// worker pool, and the training entry point.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "markersim/agent.hpp"
#include "markersim/planners.hpp"
#include "markersim/rl/env.hpp"
#include "markersim/rl/policy.hpp"
#include "markersim/rl/train.hpp"
#include "markersim/scenario.hpp"

namespace markersim {

enum class Method { Spiral2D, Spiral3D, Zigzag2D, Zigzag3D, E2ERL };

std::string_view to_string(Method m);
Method method_from_string(std::string_view name);
std::vector<Method> all_methods();

struct RunConfig {
  std::filesystem::path manifest;
  std::vector<Method> methods = all_methods();
  std::optional<std::filesystem::path> checkpoint;  // required for E2ERL
  DetectionModelParams detection;
  PlannerConfig planner;
  EpisodeConfig episode;
  rl::EnvConfig rl_env;
  int workers = 1;
  std::filesystem::path out_dir = "run";
  std::uint64_t master_seed = 20250101;
  bool force = false;

  void validate() const;
};

/// Per-episode seed: hash split of (master seed, method name, scenario id).
std::uint64_t episode_seed(std::uint64_t master_seed, Method method, const std::string& scenario_id);

/// One episode of one method. `policy` must be set for E2ERL.
EpisodeRecord run_method(const Scenario& scenario, Method method, const RunConfig& config,
                         const rl::Policy* policy);

std::filesystem::path record_path(const std::filesystem::path& out_dir, Method method,
                                  const std::string& scenario_id);

struct RunSummary {
  int executed = 0;
  int skipped = 0;
  std::vector<std::string> errors;  // harness errors, one per failed episode
};

/// Runs every (method, scenario) pair not already recorded (all pairs with
/// force). Writes records under out_dir/records/<method>/ and out_dir/run_meta.json.
RunSummary run_benchmark(const RunConfig& config, std::ostream& log);

/// Writes the suite and returns the summary line, e.g. "966 scenarios (102/240/624)".
std::string generate_suite_files(const SuiteConfig& config, const std::filesystem::path& out_dir);

struct TrainOutcome {
  rl::TrainResult result;
  std::filesystem::path checkpoint;
  std::filesystem::path log;
  double final_covered_fraction = 0.0;
};

/// Trains and writes checkpoint.json and training_log.csv into out_dir.
TrainOutcome train_to_dir(const rl::TrainConfig& config, const std::filesystem::path& out_dir);

/// Harness config file (JSON). Keys, all optional:
///   seed, combos, variants, workers, step_budget, methods [names],
///   checkpoint, camera ("benchmark" | "full"),
///   detection {base_tp, altitude_ref, altitude_slope, weather_penalty,
///              night_floor, fp_base, fp_weather_gain, report_noise_sigma,
///              effective_half_angle_deg, marker_radius},
///   planner {waypoint_step, lane_spacing, climb_increment, max_altitude,
///            clearance_threshold, window_fraction, window_percentile},
///   sunny_severity_as_zero
struct HarnessConfig {
  std::uint64_t seed = 20250101;
  std::optional<int> combos;
  int variants = 6;
  RunConfig run;
  bool sunny_severity_as_zero = true;

  SuiteConfig suite() const;
};

HarnessConfig parse_harness_config(const std::string& json_text);

}  // namespace markersim
