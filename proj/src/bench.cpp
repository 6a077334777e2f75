#include "markersim/bench.hpp"

#include <atomic>
#include <mutex>
#include <ostream>
#include <thread>

#include "json.hpp"
#include "markersim/errors.hpp"
#include "markersim/records.hpp"
#include "markersim/rl/controller.hpp"
#include "markersim/scene_io.hpp"

namespace markersim {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Spiral2D: return "Spiral2D";
    case Method::Spiral3D: return "Spiral3D";
    case Method::Zigzag2D: return "Zigzag2D";
    case Method::Zigzag3D: return "Zigzag3D";
    case Method::E2ERL: return "E2ERL";
  }
  return "?";
}

Method method_from_string(std::string_view name) {
  for (const Method m : all_methods()) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

std::vector<Method> all_methods() {
  return {Method::Spiral2D, Method::Spiral3D, Method::Zigzag2D, Method::Zigzag3D, Method::E2ERL};
}

void RunConfig::validate() const {
  if (methods.empty()) throw ConfigError("run config: at least one method is required");
  if (workers < 1) throw ConfigError("run config: workers must be >= 1");
  if (!fs::exists(manifest)) throw ConfigError("run config: manifest not found: " + manifest.string());
  const bool wants_rl = std::find(methods.begin(), methods.end(), Method::E2ERL) != methods.end();
  if (wants_rl && (!checkpoint || !fs::exists(*checkpoint))) {
    throw ConfigError("run config: E2ERL needs an existing checkpoint");
  }
  detection.validate();
  planner.validate();
  rl_env.validate();
  if (episode.step_budget < 1) throw ConfigError("run config: step_budget must be >= 1");
}

std::uint64_t episode_seed(std::uint64_t master_seed, Method method, const std::string& scenario_id) {
  return derive_seed(derive_seed(master_seed, to_string(method)), scenario_id);
}

EpisodeRecord run_method(const Scenario& scenario, Method method, const RunConfig& config,
                         const rl::Policy* policy) {
  const std::uint64_t seed = episode_seed(config.master_seed, method, scenario.scenario_id);
  Rng rng(derive_seed(seed, "detector"));
  PlannerConfig planner = config.planner;
  planner.drone_radius = config.episode.drone_radius;
  std::unique_ptr<Controller> controller;
  const Vec3& center = scenario.drone_start.position;
  switch (method) {
    case Method::Spiral2D:
    case Method::Spiral3D:
      controller = planner_controller(
          plan_spiral(center, scenario.search_radius, planner),
          method == Method::Spiral2D ? PlannerVariant::Flat2D : PlannerVariant::Climb3D, planner);
      break;
    case Method::Zigzag2D:
    case Method::Zigzag3D:
      controller = planner_controller(
          plan_zigzag(center, scenario.search_radius, planner),
          method == Method::Zigzag2D ? PlannerVariant::Flat2D : PlannerVariant::Climb3D, planner);
      break;
    case Method::E2ERL: {
      if (policy == nullptr) throw ContractViolation("run_method: E2ERL requires a policy");
      rl::EnvConfig env = config.rl_env;
      env.detection = config.detection;
      env.drone_radius = config.episode.drone_radius;
      controller = rl::rl_controller(*policy, true, env, seed);
      break;
    }
  }
  return run_episode(scenario, *controller, config.detection, config.episode, rng,
                     std::string(to_string(method)));
}

fs::path record_path(const fs::path& out_dir, Method method, const std::string& scenario_id) {
  return out_dir / "records" / std::string(to_string(method)) / (scenario_id + ".json");
}

RunSummary run_benchmark(const RunConfig& config, std::ostream& log) {
  config.validate();
  const std::vector<Scenario> suite = load_suite(config.manifest);
  std::optional<rl::Policy> policy;
  if (std::find(config.methods.begin(), config.methods.end(), Method::E2ERL) != config.methods.end()) {
    policy = rl::read_checkpoint(*config.checkpoint).policy;
  }

  struct Item {
    Method method;
    std::size_t scenario;
  };
  std::vector<Item> work;
  RunSummary summary;
  for (const Method m : config.methods) {
    fs::create_directories(config.out_dir / "records" / std::string(to_string(m)));
    for (std::size_t i = 0; i < suite.size(); ++i) {
      if (!config.force && fs::exists(record_path(config.out_dir, m, suite[i].scenario_id))) {
        ++summary.skipped;
        continue;
      }
      work.push_back({m, i});
    }
  }

  std::atomic<std::size_t> next{0};
  std::atomic<int> executed{0};
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < work.size(); k = next++) {
      const Item& item = work[k];
      const Scenario& sc = suite[item.scenario];
      try {
        const EpisodeRecord rec = run_method(sc, item.method, config, policy ? &*policy : nullptr);
        write_record_file(record_path(config.out_dir, item.method, sc.scenario_id), rec);
        ++executed;
      } catch (const std::exception& e) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        summary.errors.push_back(std::string(to_string(item.method)) + "/" + sc.scenario_id + ": " +
                                 e.what());
      }
    }
  };
  const int n_threads = std::min<int>(config.workers, static_cast<int>(std::max<std::size_t>(1, work.size())));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  summary.executed = executed;
  std::sort(summary.errors.begin(), summary.errors.end());

  json meta;
  meta["schema"] = "markersim.run/1";
  meta["manifest"] = config.manifest.string();
  meta["master_seed"] = config.master_seed;
  json methods = json::array();
  for (const Method m : config.methods) methods.push_back(std::string(to_string(m)));
  meta["methods"] = std::move(methods);
  write_file_atomic(config.out_dir / "run_meta.json", meta.dump(2) + "\n");

  log << "executed " << summary.executed << " episodes, skipped " << summary.skipped << ", errors "
      << summary.errors.size() << '\n';
  for (const auto& e : summary.errors) log << "harness error: " << e << '\n';
  return summary;
}

std::string generate_suite_files(const SuiteConfig& config, const fs::path& out_dir) {
  config.validate();
  const std::vector<Scenario> suite = generate_suite(config);
  write_suite(out_dir, suite);
  std::string counts;
  for (const auto& p : config.profiles) {
    int n = 0;
    for (const auto& s : suite) n += s.scene.profile() == p.profile.id ? 1 : 0;
    if (!counts.empty()) counts += "/";
    counts += std::to_string(n);
  }
  return std::to_string(suite.size()) + (suite.size() == 1 ? " scenario (" : " scenarios (") + counts + ")";
}

TrainOutcome train_to_dir(const rl::TrainConfig& config, const fs::path& out_dir) {
  TrainOutcome out;
  out.result = rl::train(config);
  fs::create_directories(out_dir);
  out.checkpoint = out_dir / "checkpoint.json";
  out.log = out_dir / "training_log.csv";
  rl::write_checkpoint(out.checkpoint, out.result.policy, config.digest());
  write_file_atomic(out.log, rl::training_log_csv(out.result.log));
  for (auto it = out.result.log.rbegin(); it != out.result.log.rend(); ++it) {
    if (it->episodes > 0) {
      out.final_covered_fraction = it->covered_fraction;
      break;
    }
  }
  return out;
}

SuiteConfig HarnessConfig::suite() const {
  SuiteConfig c = combos ? SuiteConfig::scaled(*combos, variants)
                         : (variants == 6 ? SuiteConfig::standard() : SuiteConfig::scaled(161, variants));
  c.master_seed = seed;
  c.detection = run.detection;
  return c;
}

namespace {

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
}

}  // namespace

HarnessConfig parse_harness_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  HarnessConfig c;
  read_opt(j, "seed", c.seed);
  c.run.master_seed = c.seed;
  if (j.contains("combos")) {
    int n = 0;
    read_opt(j, "combos", n);
    c.combos = n;
  }
  read_opt(j, "variants", c.variants);
  read_opt(j, "workers", c.run.workers);
  read_opt(j, "step_budget", c.run.episode.step_budget);
  read_opt(j, "sunny_severity_as_zero", c.sunny_severity_as_zero);
  if (j.contains("methods")) {
    std::vector<std::string> names;
    read_opt(j, "methods", names);
    c.run.methods.clear();
    for (const auto& n : names) c.run.methods.push_back(method_from_string(n));
  }
  if (j.contains("checkpoint")) {
    std::string p;
    read_opt(j, "checkpoint", p);
    c.run.checkpoint = p;
  }
  if (j.contains("camera")) {
    std::string cam;
    read_opt(j, "camera", cam);
    if (cam == "benchmark") {
      c.run.planner.camera = CameraIntrinsics::benchmark_forward();
    } else if (cam == "full") {
      c.run.planner.camera = CameraIntrinsics::full_forward();
    } else {
      throw ConfigError("config field 'camera' must be \"benchmark\" or \"full\"");
    }
  }
  if (j.contains("detection")) {
    const auto& d = j["detection"];
    auto& p = c.run.detection;
    read_opt(d, "base_tp", p.base_tp);
    read_opt(d, "altitude_ref", p.altitude_ref);
    read_opt(d, "altitude_slope", p.altitude_slope);
    read_opt(d, "weather_penalty", p.weather_penalty);
    read_opt(d, "night_floor", p.night_floor);
    read_opt(d, "fp_base", p.fp_base);
    read_opt(d, "fp_weather_gain", p.fp_weather_gain);
    read_opt(d, "report_noise_sigma", p.report_noise_sigma);
    read_opt(d, "effective_half_angle_deg", p.effective_half_angle_deg);
    read_opt(d, "marker_radius", p.marker_radius);
    p.validate();
  }
  if (j.contains("planner")) {
    const auto& d = j["planner"];
    auto& p = c.run.planner;
    read_opt(d, "waypoint_step", p.waypoint_step);
    read_opt(d, "lane_spacing", p.lane_spacing);
    read_opt(d, "climb_increment", p.climb_increment);
    read_opt(d, "max_altitude", p.max_altitude);
    read_opt(d, "clearance_threshold", p.clearance_threshold);
    read_opt(d, "window_fraction", p.window_fraction);
    read_opt(d, "window_percentile", p.window_percentile);
    p.validate();
  }
  return c;
}

}  // namespace markersim
