// Seeded procedural generation of scenes, start poses, perceptual variants and
// the full benchmark suite.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "markersim/geometry.hpp"
#include "markersim/rng.hpp"
#include "markersim/sensors.hpp"

namespace markersim {

enum class LayoutStyle { CourtyardMidrise, TallWithVegetation, DenseLowrise };

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct IntInterval {
  int lo = 0;
  int hi = 0;
};

struct MapProfile {
  MapProfileId id = MapProfileId::ModernCity;
  double extent_x = 54.0;
  double extent_y = 49.0;
  IntInterval building_count{6, 10};
  Interval building_footprint{7.0, 12.0};
  Interval building_height{12.0, 20.0};
  LayoutStyle layout = LayoutStyle::CourtyardMidrise;
  double min_gap = 3.0;           // xy gap between buildings
  double courtyard_radius = 0.0;  // kept free around the map center
  IntInterval vegetation_count{0, 0};
  Interval vegetation_footprint{1.0, 2.0};
  Interval vegetation_height{4.0, 8.0};
  double rooftop_marker_prob = 0.25;
  double marker_clearance = 2.0;  // from obstacle edges and map border

  static MapProfile modern_city();
  static MapProfile post_soviet();
  static MapProfile urban_district();
  static MapProfile defaults_for(MapProfileId id);

  void validate() const;
};

struct Scenario {
  std::string scenario_id;
  Scene scene;
  std::string scene_file;  // relative path inside a suite directory, may be empty
  Pose6DoF drone_start;
  double time_of_day = 0.5;
  WeatherSpec weather;
  std::uint64_t seed = 0;
  double search_radius = 30.0;
};

struct StartSamplingParams {
  double altitude_mean = 20.0;
  double altitude_sd = 4.0;
  double altitude_min = 10.0;
  double altitude_max = 32.0;
  double drone_radius = 0.5;
  int max_attempts = 2000;
};

struct TimeOfDayParams {
  double mean_a = 0.5;
  double mean_b = 0.85;
  double sd = 0.07;
};

/// Obstacle layout only; no marker. Deterministic per (profile, seed).
std::vector<BoxObstacle> generate_layout(const MapProfile& profile, std::uint64_t seed);

/// Places a marker on the ground or a rooftop with the profile's clearance.
Vec3 place_marker(const MapProfile& profile, const std::vector<BoxObstacle>& obstacles,
                  std::uint64_t seed);

Rect profile_bounds(const MapProfile& profile);

Scene generate_scene(const MapProfile& profile, std::uint64_t seed);

/// Start pose within `search_radius` (xy) of the marker: collision-free, yaw a
/// multiple of 90 degrees, marker outside the detection footprint.
Pose6DoF sample_drone_start(const Scene& scene, double search_radius, std::uint64_t seed,
                            const StartSamplingParams& params = {},
                            const DetectionModelParams& detection = {});

double sample_time_of_day(std::uint64_t seed, const TimeOfDayParams& params = {});

struct ProfileSuiteSpec {
  MapProfile profile;
  int marker_sites = 1;
  int combos = 1;           // marker-start pairs
  int declared_total = -1;  // expected scenario count, -1 = combos * variants
};

struct SuiteConfig {
  std::vector<ProfileSuiteSpec> profiles;
  int variants_per_combo = 6;
  int max_starts_per_site = 5;
  double search_radius = 30.0;
  Interval severity{0.2, 0.4};
  StartSamplingParams start;
  TimeOfDayParams time;
  DetectionModelParams detection;
  std::uint64_t master_seed = 20250101;

  /// 966 scenarios: 17/40/104 combos over 5/9/24 marker sites, 6 variants each.
  static SuiteConfig standard();
  /// Scales the default suite to `total_combos` combos (largest-remainder split
  /// over the default 17:40:104 ratio) and `variants` variants per combo.
  static SuiteConfig scaled(int total_combos, int variants);

  void validate() const;
};

std::vector<Scenario> generate_suite(const SuiteConfig& config);

/// Checks every Scenario invariant; returns a list of violations (empty = ok).
std::vector<std::string> validate_scenario(const Scenario& scenario,
                                           const DetectionModelParams& detection = {},
                                           double drone_radius = 0.5);

// Suite manifest: JSON Lines, one scenario per line, each carrying
// "schema": "markersim.suite/1". Scenes are stored as separate scene files
// referenced by "scene_file".
inline constexpr const char* kSuiteSchema = "markersim.suite/1";

std::string manifest_line(const Scenario& scenario);
void write_suite(const std::filesystem::path& dir, const std::vector<Scenario>& suite);

/// Manifest row without the scene geometry.
struct ManifestEntry {
  std::string scenario_id;
  MapProfileId profile = MapProfileId::ModernCity;
  std::string scene_file;
  std::uint64_t seed = 0;
  Pose6DoF start;
  Vec3 marker;
  double time_of_day = 0.0;
  WeatherSpec weather;
  double search_radius = 30.0;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest_path);
/// Loads scenarios, resolving scene files relative to the manifest directory.
std::vector<Scenario> load_suite(const std::filesystem::path& manifest_path);

}  // namespace markersim
