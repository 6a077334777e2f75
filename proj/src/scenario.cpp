#include "markersim/scenario.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "markersim/errors.hpp"
#include "markersim/scene_io.hpp"

namespace markersim {

using nlohmann::json;

namespace {

constexpr int kLayoutRestarts = 50;
constexpr int kPlacementAttempts = 2000;

bool rects_separated(const BoxObstacle& a, const BoxObstacle& b, double gap) {
  return a.max_corner.x + gap <= b.min_corner.x || b.max_corner.x + gap <= a.min_corner.x ||
         a.max_corner.y + gap <= b.min_corner.y || b.max_corner.y + gap <= a.min_corner.y;
}

double xy_rect_distance(double x, double y, const BoxObstacle& b) {
  const double dx = std::max({b.min_corner.x - x, 0.0, x - b.max_corner.x});
  const double dy = std::max({b.min_corner.y - y, 0.0, y - b.max_corner.y});
  return std::hypot(dx, dy);
}

bool place_boxes(const Rect& bounds, int count, const Interval& footprint, const Interval& height,
                 double gap, double courtyard_radius, Rng& rng, std::vector<BoxObstacle>& placed,
                 const char* what) {
  constexpr double kBorder = 1.0;
  for (int k = 0; k < count; ++k) {
    bool ok = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !ok; ++attempt) {
      const double w = uniform(rng, footprint.lo, footprint.hi);
      const double d = uniform(rng, footprint.lo, footprint.hi);
      const double h = uniform(rng, height.lo, height.hi);
      const double span_x = bounds.width() - 2.0 * kBorder - w;
      const double span_y = bounds.height() - 2.0 * kBorder - d;
      if (span_x < 0.0 || span_y < 0.0) continue;
      const double x0 = bounds.min_x + kBorder + uniform(rng, 0.0, span_x);
      const double y0 = bounds.min_y + kBorder + uniform(rng, 0.0, span_y);
      BoxObstacle box{{x0, y0, 0.0}, {x0 + w, y0 + d, h}};
      if (courtyard_radius > 0.0) {
        const double cx = 0.5 * (bounds.min_x + bounds.max_x);
        const double cy = 0.5 * (bounds.min_y + bounds.max_y);
        if (xy_rect_distance(cx, cy, box) < courtyard_radius) continue;
      }
      ok = std::all_of(placed.begin(), placed.end(),
                       [&](const BoxObstacle& o) { return rects_separated(box, o, gap); });
      if (ok) placed.push_back(box);
    }
    if (!ok) {
      throw GenerationError(std::string(what) + " placement failed: could not place " + what +
                            " " + std::to_string(k + 1) + " of " + std::to_string(count) +
                            " with min gap " + std::to_string(gap) + " m");
    }
  }
  return true;
}

std::string pad2(int v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d", v);
  return buf;
}

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw DataError("expected [x, y, z]");
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

}  // namespace

MapProfile MapProfile::modern_city() {
  MapProfile p;
  p.id = MapProfileId::ModernCity;
  p.extent_x = 54.0;
  p.extent_y = 49.0;
  p.building_count = {6, 10};
  p.building_footprint = {7.0, 12.0};
  p.building_height = {12.0, 20.0};
  p.layout = LayoutStyle::CourtyardMidrise;
  p.min_gap = 3.0;
  p.courtyard_radius = 10.0;
  return p;
}

MapProfile MapProfile::post_soviet() {
  MapProfile p;
  p.id = MapProfileId::PostSoviet;
  p.extent_x = 59.0;
  p.extent_y = 63.0;
  p.building_count = {4, 7};
  p.building_footprint = {9.0, 15.0};
  p.building_height = {20.0, 35.0};
  p.layout = LayoutStyle::TallWithVegetation;
  p.min_gap = 5.0;
  p.vegetation_count = {6, 12};
  p.vegetation_footprint = {1.0, 2.0};
  p.vegetation_height = {4.0, 8.0};
  return p;
}

MapProfile MapProfile::urban_district() {
  MapProfile p;
  p.id = MapProfileId::UrbanDistrict;
  p.extent_x = 137.0;
  p.extent_y = 108.0;
  p.building_count = {20, 35};
  p.building_footprint = {8.0, 14.0};
  p.building_height = {4.0, 10.0};
  p.layout = LayoutStyle::DenseLowrise;
  p.min_gap = 2.0;
  return p;
}

MapProfile MapProfile::defaults_for(MapProfileId id) {
  switch (id) {
    case MapProfileId::ModernCity: return modern_city();
    case MapProfileId::PostSoviet: return post_soviet();
    case MapProfileId::UrbanDistrict: return urban_district();
  }
  return modern_city();
}

void MapProfile::validate() const {
  if (!(extent_x > 0.0 && extent_y > 0.0)) throw ConfigError("map profile: extents must be positive");
  auto nonempty = [](const Interval& i) { return i.lo <= i.hi; };
  if (building_count.lo < 0 || building_count.lo > building_count.hi ||
      vegetation_count.lo < 0 || vegetation_count.lo > vegetation_count.hi) {
    throw ConfigError("map profile: count ranges must be nonempty and nonnegative");
  }
  if (!nonempty(building_footprint) || !nonempty(building_height) ||
      !nonempty(vegetation_footprint) || !nonempty(vegetation_height)) {
    throw ConfigError("map profile: ranges must be nonempty");
  }
  if (building_count.hi > 0 && (building_footprint.lo <= 0.0 || building_height.lo <= 0.0)) {
    throw ConfigError("map profile: building dimensions must be positive");
  }
}

Rect profile_bounds(const MapProfile& profile) {
  return {-0.5 * profile.extent_x, -0.5 * profile.extent_y, 0.5 * profile.extent_x,
          0.5 * profile.extent_y};
}

std::vector<BoxObstacle> generate_layout(const MapProfile& profile, std::uint64_t seed) {
  profile.validate();
  const Rect bounds = profile_bounds(profile);
  // Sequential placement can jam; restart the whole layout from a fresh stream.
  for (int restart = 0;; ++restart) {
    Rng rng(derive_seed(seed, "layout", static_cast<std::uint64_t>(restart)));
    std::vector<BoxObstacle> boxes;
    try {
      const int n_buildings = uniform_int(rng, profile.building_count.lo, profile.building_count.hi);
      place_boxes(bounds, n_buildings, profile.building_footprint, profile.building_height,
                  profile.min_gap, profile.courtyard_radius, rng, boxes, "building");
      const int n_veg = uniform_int(rng, profile.vegetation_count.lo, profile.vegetation_count.hi);
      if (n_veg > 0) {
        place_boxes(bounds, n_veg, profile.vegetation_footprint, profile.vegetation_height, 1.5, 0.0,
                    rng, boxes, "vegetation");
      }
      return boxes;
    } catch (const GenerationError& e) {
      if (restart + 1 >= kLayoutRestarts) {
        throw GenerationError(std::string(e.what()) + " (after " + std::to_string(kLayoutRestarts) +
                              " layout restarts)");
      }
    }
  }
}

Vec3 place_marker(const MapProfile& profile, const std::vector<BoxObstacle>& obstacles,
                  std::uint64_t seed) {
  Rng rng(derive_seed(seed, "marker"));
  const Rect bounds = profile_bounds(profile);
  const double c = profile.marker_clearance;

  std::vector<const BoxObstacle*> roofs;
  for (const auto& b : obstacles) {
    const double w = b.max_corner.x - b.min_corner.x;
    const double d = b.max_corner.y - b.min_corner.y;
    if (w > 2.0 * c + 1.0 && d > 2.0 * c + 1.0) roofs.push_back(&b);
  }
  const bool on_roof = !roofs.empty() && uniform(rng, 0.0, 1.0) < profile.rooftop_marker_prob;
  if (on_roof) {
    const BoxObstacle& b = *roofs[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(roofs.size()) - 1))];
    return {uniform(rng, b.min_corner.x + c, b.max_corner.x - c),
            uniform(rng, b.min_corner.y + c, b.max_corner.y - c), b.max_corner.z};
  }
  for (int attempt = 0; attempt < 20 * kPlacementAttempts; ++attempt) {
    const double x = uniform(rng, bounds.min_x + c, bounds.max_x - c);
    const double y = uniform(rng, bounds.min_y + c, bounds.max_y - c);
    const bool clear = std::all_of(obstacles.begin(), obstacles.end(), [&](const BoxObstacle& b) {
      return xy_rect_distance(x, y, b) >= c;
    });
    if (clear) return {x, y, 0.0};
  }
  throw GenerationError("marker placement failed: no ground point with " + std::to_string(c) +
                        " m clearance from obstacle edges");
}

Scene generate_scene(const MapProfile& profile, std::uint64_t seed) {
  auto boxes = generate_layout(profile, seed);
  const Vec3 marker = place_marker(profile, boxes, seed);
  return Scene(std::move(boxes), marker, profile_bounds(profile), profile.id);
}

Pose6DoF sample_drone_start(const Scene& scene, double search_radius, std::uint64_t seed,
                            const StartSamplingParams& params,
                            const DetectionModelParams& detection) {
  Rng rng(derive_seed(seed, "start"));
  const Vec3& marker = scene.marker_position();
  for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
    // Truncated normal by rejection; the window holds > 99% of the mass.
    double alt = normal(rng, params.altitude_mean, params.altitude_sd);
    while (alt < params.altitude_min || alt > params.altitude_max) {
      alt = normal(rng, params.altitude_mean, params.altitude_sd);
    }
    const double r = search_radius * std::sqrt(uniform(rng, 0.0, 1.0));
    const double theta = uniform(rng, 0.0, 2.0 * M_PI);
    const double yaw = 90.0 * uniform_int(rng, 0, 3);
    Pose6DoF pose{{marker.x + r * std::cos(theta), marker.y + r * std::sin(theta), alt}, yaw, 0.0,
                  0.0};
    if (!scene.bounds().contains_xy(pose.position)) continue;
    if (xy_distance(pose.position, marker) > search_radius) continue;
    if (swept_collision(scene, pose.position, pose.position, params.drone_radius)) continue;
    const Footprint fp = detection_footprint(scene, pose, detection);
    if (xy_distance(marker, fp.center) <= fp.radius + detection.marker_radius) continue;
    return pose;
  }
  throw GenerationError("start sampling failed: no collision-free start with the marker outside "
                        "the detection footprint after " +
                        std::to_string(params.max_attempts) + " attempts");
}

double sample_time_of_day(std::uint64_t seed, const TimeOfDayParams& params) {
  Rng rng(derive_seed(seed, "time"));
  const double mean = uniform(rng, 0.0, 1.0) < 0.5 ? params.mean_a : params.mean_b;
  return std::clamp(normal(rng, mean, params.sd), 0.0, 1.0);
}

SuiteConfig SuiteConfig::standard() {
  SuiteConfig c;
  c.profiles = {{MapProfile::modern_city(), 5, 17, 102},
                {MapProfile::post_soviet(), 9, 40, 240},
                {MapProfile::urban_district(), 24, 104, 624}};
  return c;
}

SuiteConfig SuiteConfig::scaled(int total_combos, int variants) {
  if (total_combos < 1 || variants < 1) throw ConfigError("suite: combos and variants must be >= 1");
  SuiteConfig base = standard();
  SuiteConfig out = base;
  out.variants_per_combo = variants;
  out.profiles.clear();

  const int default_total = std::accumulate(base.profiles.begin(), base.profiles.end(), 0,
                                            [](int s, const auto& p) { return s + p.combos; });
  std::vector<int> alloc(base.profiles.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  int assigned = 0;
  for (std::size_t i = 0; i < base.profiles.size(); ++i) {
    const double exact = static_cast<double>(total_combos) * base.profiles[i].combos / default_total;
    alloc[i] = static_cast<int>(exact);
    assigned += alloc[i];
    remainders.push_back({exact - alloc[i], i});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total_combos; ++k, ++assigned) alloc[remainders[k].second]++;

  for (std::size_t i = 0; i < base.profiles.size(); ++i) {
    const int combos = alloc[i];
    if (combos == 0) continue;
    const auto& def = base.profiles[i];
    const int min_sites = (combos + base.max_starts_per_site - 1) / base.max_starts_per_site;
    const int scaled_sites =
        static_cast<int>(std::lround(static_cast<double>(def.marker_sites) * combos / def.combos));
    const int sites = std::clamp(scaled_sites, min_sites, combos);
    out.profiles.push_back({def.profile, sites, combos, combos * variants});
  }
  return out;
}

void SuiteConfig::validate() const {
  if (profiles.empty()) throw ConfigError("suite: at least one profile required");
  if (variants_per_combo < 1) throw ConfigError("suite: variants_per_combo must be >= 1");
  if (max_starts_per_site < 1) throw ConfigError("suite: max_starts_per_site must be >= 1");
  if (!(search_radius > 0.0)) throw ConfigError("suite: search_radius must be positive");
  for (const auto& p : profiles) {
    const std::string name(to_string(p.profile.id));
    if (p.marker_sites < 1 || p.combos < 1) {
      throw ConfigError("suite: " + name + " needs at least one marker site and one combo");
    }
    if (p.combos < p.marker_sites) {
      throw ConfigError("suite: " + name + " has fewer combos than marker sites");
    }
    if (p.combos > p.marker_sites * max_starts_per_site) {
      throw ConfigError("suite: " + name + " needs more than " +
                        std::to_string(max_starts_per_site) + " starts per marker site");
    }
    if (p.declared_total >= 0 && p.declared_total != p.combos * variants_per_combo) {
      throw ConfigError("suite: " + name + " combos x variants = " +
                        std::to_string(p.combos * variants_per_combo) + " but declared total is " +
                        std::to_string(p.declared_total));
    }
    p.profile.validate();
  }
}

std::vector<Scenario> generate_suite(const SuiteConfig& config) {
  config.validate();
  constexpr std::array<WeatherKind, 3> kKinds{WeatherKind::Sunny, WeatherKind::Foggy,
                                              WeatherKind::Dusty};
  std::vector<Scenario> suite;
  for (const auto& spec : config.profiles) {
    const std::string name(to_string(spec.profile.id));
    const auto layout = generate_layout(spec.profile, derive_seed(config.master_seed, "layout:" + name));
    const int base = spec.combos / spec.marker_sites;
    const int extra = spec.combos % spec.marker_sites;
    for (int site = 0; site < spec.marker_sites; ++site) {
      const Vec3 marker = place_marker(
          spec.profile, layout, derive_seed(config.master_seed, "marker:" + name, static_cast<std::uint64_t>(site)));
      const Scene scene(layout, marker, profile_bounds(spec.profile), spec.profile.id);
      const std::string site_tag = name + "_m" + pad2(site);
      const int starts = base + (site < extra ? 1 : 0);
      for (int s = 0; s < starts; ++s) {
        const std::uint64_t start_seed =
            derive_seed(config.master_seed, "start:" + site_tag, static_cast<std::uint64_t>(s));
        const Pose6DoF start = sample_drone_start(scene, config.search_radius, start_seed,
                                                  config.start, config.detection);
        for (int v = 0; v < config.variants_per_combo; ++v) {
          const std::string id = site_tag + "_s" + std::to_string(s) + "_v" + std::to_string(v);
          const std::uint64_t seed = derive_seed(config.master_seed, "scenario:" + id);
          WeatherSpec weather;
          weather.kind = kKinds[static_cast<std::size_t>(v) % kKinds.size()];
          if (weather.kind != WeatherKind::Sunny) {
            Rng sev(derive_seed(seed, "severity"));
            weather.severity = uniform(sev, config.severity.lo, config.severity.hi);
          }
          suite.push_back(Scenario{id, scene, "scenes/" + site_tag + ".scene", start,
                                   sample_time_of_day(seed, config.time), weather, seed,
                                   config.search_radius});
        }
      }
    }
  }
  return suite;
}

std::vector<std::string> validate_scenario(const Scenario& sc, const DetectionModelParams& detection,
                                           double drone_radius) {
  std::vector<std::string> issues;
  const Vec3& marker = sc.scene.marker_position();
  const Vec3& p = sc.drone_start.position;
  if (xy_distance(p, marker) > sc.search_radius) issues.push_back("marker outside search radius");
  if (swept_collision(sc.scene, p, p, drone_radius)) issues.push_back("start in collision");
  const Footprint fp = detection_footprint(sc.scene, sc.drone_start, detection);
  if (xy_distance(marker, fp.center) <= fp.radius + detection.marker_radius) {
    issues.push_back("marker inside start detection footprint");
  }
  if (std::fmod(sc.drone_start.yaw_deg, 90.0) != 0.0) issues.push_back("start yaw not a multiple of 90");
  if (sc.time_of_day < 0.0 || sc.time_of_day > 1.0) issues.push_back("time of day outside [0, 1]");
  if (sc.weather.kind == WeatherKind::Sunny && sc.weather.severity != 0.0) {
    issues.push_back("sunny weather with nonzero severity");
  }
  if (sc.weather.severity < 0.0 || sc.weather.severity > 1.0) issues.push_back("severity outside [0, 1]");
  return issues;
}

std::string manifest_line(const Scenario& sc) {
  json j;
  j["schema"] = kSuiteSchema;
  j["scenario_id"] = sc.scenario_id;
  j["profile"] = std::string(to_string(sc.scene.profile()));
  j["scene_file"] = sc.scene_file;
  j["seed"] = sc.seed;
  j["start"] = {{"position", vec_json(sc.drone_start.position)}, {"yaw", sc.drone_start.yaw_deg}};
  j["marker"] = vec_json(sc.scene.marker_position());
  j["time"] = sc.time_of_day;
  j["weather"] = std::string(to_string(sc.weather.kind));
  j["severity"] = sc.weather.severity;
  j["search_radius"] = sc.search_radius;
  return j.dump();
}

void write_suite(const std::filesystem::path& dir, const std::vector<Scenario>& suite) {
  std::filesystem::create_directories(dir / "scenes");
  std::string manifest;
  std::vector<std::string> written;
  for (const auto& sc : suite) {
    if (sc.scene_file.empty()) throw DataError("scenario " + sc.scenario_id + " has no scene file");
    if (std::find(written.begin(), written.end(), sc.scene_file) == written.end()) {
      write_scene_file(dir / sc.scene_file, sc.scene);
      written.push_back(sc.scene_file);
    }
    manifest += manifest_line(sc);
    manifest += '\n';
  }
  write_file_atomic(dir / "manifest.jsonl", manifest);
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest_path) {
  std::istringstream in(read_file(manifest_path));
  std::vector<ManifestEntry> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (j.at("schema").get<std::string>() != kSuiteSchema) {
        throw DataError("unsupported schema " + j.at("schema").get<std::string>());
      }
      ManifestEntry e;
      e.scenario_id = j.at("scenario_id").get<std::string>();
      e.profile = profile_from_string(j.at("profile").get<std::string>());
      e.scene_file = j.at("scene_file").get<std::string>();
      e.seed = j.at("seed").get<std::uint64_t>();
      e.start.position = vec_from_json(j.at("start").at("position"));
      e.start.yaw_deg = j.at("start").at("yaw").get<double>();
      e.marker = vec_from_json(j.at("marker"));
      e.time_of_day = j.at("time").get<double>();
      e.weather.kind = weather_from_string(j.at("weather").get<std::string>());
      e.weather.severity = j.at("severity").get<double>();
      e.search_radius = j.at("search_radius").get<double>();
      out.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw DataError(manifest_path.string() + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return out;
}

std::vector<Scenario> load_suite(const std::filesystem::path& manifest_path) {
  const auto entries = read_manifest(manifest_path);
  const auto dir = manifest_path.parent_path();
  std::vector<std::pair<std::string, Scene>> cache;
  std::vector<Scenario> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    auto it = std::find_if(cache.begin(), cache.end(),
                           [&](const auto& c) { return c.first == e.scene_file; });
    if (it == cache.end()) {
      cache.emplace_back(e.scene_file, read_scene_file(dir / e.scene_file));
      it = std::prev(cache.end());
    }
    const Scene& scene = it->second;
    if (scene.marker_position() != e.marker) {
      throw DataError("scenario " + e.scenario_id + ": marker differs from scene file");
    }
    out.push_back(Scenario{e.scenario_id, scene, e.scene_file, e.start, e.time_of_day, e.weather,
                           e.seed, e.search_radius});
  }
  return out;
}

}  // namespace markersim
