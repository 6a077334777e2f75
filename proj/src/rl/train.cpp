#include "markersim/rl/train.hpp"

#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "markersim/errors.hpp"
#include "markersim/scene_io.hpp"

namespace markersim::rl {

using nlohmann::json;

namespace {

json arch_json(const PolicyArch& a) {
  return {{"depth_width", a.depth_width}, {"depth_height", a.depth_height},
          {"pool_grid", a.pool_grid},     {"embed", a.embed},
          {"hidden1", a.hidden1},         {"hidden2", a.hidden2},
          {"mask_unsafe_forward", a.mask_unsafe_forward}};
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
}

PolicyArch arch_from(const json& j) {
  PolicyArch a;
  read_opt(j, "depth_width", a.depth_width);
  read_opt(j, "depth_height", a.depth_height);
  read_opt(j, "pool_grid", a.pool_grid);
  read_opt(j, "embed", a.embed);
  read_opt(j, "hidden1", a.hidden1);
  read_opt(j, "hidden2", a.hidden2);
  read_opt(j, "mask_unsafe_forward", a.mask_unsafe_forward);
  return a;
}

double mean_of(const std::deque<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

void TrainConfig::validate() const {
  arch.validate();
  ppo.validate();
  env.validate();
  if (curriculum.empty()) throw ConfigError("train config: curriculum must be nonempty");
  for (std::size_t i = 0; i < curriculum.size(); ++i) {
    const auto& s = curriculum[i];
    if (!(s.search_radius > 0.0) || s.episodes_per_eval < 1) {
      throw ConfigError("train config: stage " + std::to_string(i) + " is invalid");
    }
    if (i > 0 && s.search_radius < curriculum[i - 1].search_radius) {
      throw ConfigError("train config: stages must not shrink the search radius");
    }
  }
  if (total_updates < 0 || horizon < 1) throw ConfigError("train config: invalid update count or horizon");
  if (env.camera.width != arch.depth_width || env.camera.height != arch.depth_height) {
    throw ConfigError("train config: camera resolution must match the policy input");
  }
}

std::string TrainConfig::canonical_json() const {
  json j;
  j["arch"] = arch_json(arch);
  j["ppo"] = {{"clip", ppo.clip},
              {"epochs", ppo.epochs},
              {"minibatches", ppo.minibatches},
              {"learning_rate", ppo.learning_rate},
              {"value_coef", ppo.value_coef},
              {"entropy_coef", ppo.entropy_coef},
              {"max_grad_norm", ppo.max_grad_norm},
              {"gamma", ppo.gamma},
              {"lambda", ppo.lambda},
              {"normalize_advantages", ppo.normalize_advantages},
              {"advantage_std_floor", ppo.advantage_std_floor}};
  const auto& r = env.reward;
  j["reward"] = {{"w_cov", r.w_cov}, {"w_step", r.w_step}, {"w_rot", r.w_rot},
                 {"w_col", r.w_col}, {"w_bound", r.w_bound}};
  j["env"] = {{"step_budget", env.step_budget},
              {"non_progress_window", env.non_progress_window},
              {"forward_step", env.forward_step},
              {"drone_radius", env.drone_radius},
              {"safety_margin", env.safety_margin},
              {"cell_size", env.cell_size},
              {"camera_max_range", env.camera.max_range},
              {"use_detector", env.use_detector}};
  json stages = json::array();
  for (const auto& s : curriculum) {
    stages.push_back({{"stage_id", s.stage_id},
                      {"obstacles", std::string(to_string(s.obstacles))},
                      {"search_radius", s.search_radius},
                      {"episodes_per_eval", s.episodes_per_eval},
                      {"advance_threshold", s.advance_threshold}});
  }
  j["curriculum"] = std::move(stages);
  j["total_updates"] = total_updates;
  j["horizon"] = horizon;
  j["seed"] = seed;
  return j.dump();
}

std::string TrainConfig::digest() const {
  std::ostringstream out;
  out << std::hex << fnv1a64(canonical_json());
  return out.str();
}

TrainConfig parse_train_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("training config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("training config must be a JSON object");
  TrainConfig c;
  if (j.contains("arch")) c.arch = arch_from(j["arch"]);
  if (j.contains("ppo")) {
    const auto& p = j["ppo"];
    read_opt(p, "clip", c.ppo.clip);
    read_opt(p, "epochs", c.ppo.epochs);
    read_opt(p, "minibatches", c.ppo.minibatches);
    read_opt(p, "learning_rate", c.ppo.learning_rate);
    read_opt(p, "value_coef", c.ppo.value_coef);
    read_opt(p, "entropy_coef", c.ppo.entropy_coef);
    read_opt(p, "max_grad_norm", c.ppo.max_grad_norm);
    read_opt(p, "gamma", c.ppo.gamma);
    read_opt(p, "lambda", c.ppo.lambda);
    read_opt(p, "normalize_advantages", c.ppo.normalize_advantages);
    read_opt(p, "advantage_std_floor", c.ppo.advantage_std_floor);
  }
  if (j.contains("reward")) {
    const auto& r = j["reward"];
    read_opt(r, "w_cov", c.env.reward.w_cov);
    read_opt(r, "w_step", c.env.reward.w_step);
    read_opt(r, "w_rot", c.env.reward.w_rot);
    read_opt(r, "w_col", c.env.reward.w_col);
    read_opt(r, "w_bound", c.env.reward.w_bound);
  }
  if (j.contains("env")) {
    const auto& e = j["env"];
    read_opt(e, "step_budget", c.env.step_budget);
    read_opt(e, "non_progress_window", c.env.non_progress_window);
    read_opt(e, "forward_step", c.env.forward_step);
    read_opt(e, "drone_radius", c.env.drone_radius);
    read_opt(e, "safety_margin", c.env.safety_margin);
    read_opt(e, "cell_size", c.env.cell_size);
    read_opt(e, "camera_max_range", c.env.camera.max_range);
    read_opt(e, "use_detector", c.env.use_detector);
  }
  c.env.camera.width = c.arch.depth_width;
  c.env.camera.height = c.arch.depth_height;
  if (j.contains("curriculum")) {
    c.curriculum.clear();
    for (const auto& s : j["curriculum"]) {
      CurriculumStage st;
      read_opt(s, "stage_id", st.stage_id);
      std::string mode = "none";
      read_opt(s, "obstacles", mode);
      st.obstacles = obstacle_mode_from_string(mode);
      read_opt(s, "search_radius", st.search_radius);
      read_opt(s, "episodes_per_eval", st.episodes_per_eval);
      read_opt(s, "advance_threshold", st.advance_threshold);
      c.curriculum.push_back(st);
    }
  }
  read_opt(j, "total_updates", c.total_updates);
  read_opt(j, "horizon", c.horizon);
  read_opt(j, "seed", c.seed);
  c.validate();
  return c;
}

TrainResult train(const TrainConfig& config) {
  config.validate();
  TrainResult result;
  result.policy = Policy::initialized(config.arch, derive_seed(config.seed, "init"));
  if (config.total_updates == 0) return result;

  Policy& policy = result.policy;
  Adam optimizer(policy.params().size());
  Rng update_rng(derive_seed(config.seed, "ppo"));
  Rng action_rng(derive_seed(config.seed, "actions"));
  SurrogateEnv env(config.env);
  std::size_t stage = 0;
  std::uint64_t episode_index = 0;
  auto next_episode = [&] {
    return env.reset(config.curriculum[stage], derive_seed(config.seed, "episode", episode_index++));
  };
  RLObservation obs = next_episode();
  double episode_return = 0.0;
  std::deque<double> recent;

  for (int update = 0; update < config.total_updates; ++update) {
    TrainLogRow row;
    row.update = update;
    row.stage = config.curriculum[stage].stage_id;
    double coverage_sum = 0.0;
    double return_sum = 0.0;
    try {
      Rollout rollout;
      rollout.steps.reserve(static_cast<std::size_t>(config.horizon));
      for (int t = 0; t < config.horizon; ++t) {
        PolicyInput input = encode(obs, config.arch);
        const PolicyOutput out = policy_forward(policy, input);
        const int a = sample_action(out, action_rng);
        const EnvStep step = env.step(static_cast<RLAction>(a));
        episode_return += step.reward;
        rollout.steps.push_back({std::move(input), a, std::log(out.probs[static_cast<std::size_t>(a)]),
                                 out.value, step.reward, step.done});
        if (step.done) {
          const double cov = env.coverage().covered_fraction();
          coverage_sum += cov;
          return_sum += episode_return;
          ++row.episodes;
          recent.push_back(cov);
          while (recent.size() > static_cast<std::size_t>(config.curriculum[stage].episodes_per_eval)) {
            recent.pop_front();
          }
          episode_return = 0.0;
          obs = next_episode();
        } else {
          obs = step.observation;
        }
      }
      if (!rollout.steps.back().done) {
        rollout.bootstrap_value = policy_forward(policy, encode(obs, config.arch)).value;
      }
      const UpdateStats stats = ppo_update(policy, optimizer, rollout, config.ppo, update_rng);
      row.policy_loss = stats.last.policy;
      row.value_loss = stats.last.value;
      row.entropy = stats.last.entropy;
      row.approx_kl = stats.last.approx_kl;
      row.clip_fraction = stats.last.clip_fraction;
    } catch (const NumericError& e) {
      result.diverged = true;
      result.message = "update " + std::to_string(update) + ": " + e.what();
      break;
    }
    if (row.episodes > 0) {
      row.covered_fraction = coverage_sum / row.episodes;
      row.mean_return = return_sum / row.episodes;
    }
    result.log.push_back(row);

    const auto& current = config.curriculum[stage];
    if (current.advance_threshold >= 0.0 && stage + 1 < config.curriculum.size() &&
        recent.size() >= static_cast<std::size_t>(current.episodes_per_eval) &&
        mean_of(recent) >= current.advance_threshold) {
      ++stage;
      recent.clear();
      episode_return = 0.0;
      obs = next_episode();
    }
  }
  result.final_stage = config.curriculum[stage].stage_id;
  return result;
}

std::string training_log_csv(const std::vector<TrainLogRow>& log) {
  std::ostringstream out;
  out << "update,stage,episodes,mean_return,covered_fraction,policy_loss,value_loss,entropy,"
         "approx_kl,clip_fraction\n";
  for (const auto& r : log) {
    out << r.update << ',' << r.stage << ',' << r.episodes << ',' << format_double(r.mean_return)
        << ',' << format_double(r.covered_fraction) << ',' << format_double(r.policy_loss) << ','
        << format_double(r.value_loss) << ',' << format_double(r.entropy) << ','
        << format_double(r.approx_kl) << ',' << format_double(r.clip_fraction) << '\n';
  }
  return out.str();
}

std::string serialize_checkpoint(const Policy& policy, const std::string& config_digest) {
  json j;
  j["schema"] = kCheckpointSchema;
  j["arch"] = arch_json(policy.arch());
  j["config_digest"] = config_digest;
  j["params"] = policy.params();
  return j.dump() + "\n";
}

Checkpoint parse_checkpoint(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("schema") || j["schema"] != kCheckpointSchema) {
    throw DataError("checkpoint: missing or unsupported schema");
  }
  for (const char* key : {"arch", "params", "config_digest"}) {
    if (!j.contains(key)) throw DataError(std::string("checkpoint: missing field '") + key + "'");
  }
  Checkpoint c;
  try {
    c.policy = Policy(arch_from(j["arch"]));
    const auto params = j["params"].get<std::vector<double>>();
    if (params.size() != c.policy.params().size()) {
      throw DataError("checkpoint: parameter count does not match the architecture");
    }
    c.policy.params() = params;
    c.config_digest = j["config_digest"].get<std::string>();
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  return c;
}

void write_checkpoint(const std::filesystem::path& path, const Policy& policy,
                      const std::string& config_digest) {
  write_file_atomic(path, serialize_checkpoint(policy, config_digest));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path));
}

CoverageEval evaluate_coverage(const Policy& policy, const CurriculumStage& stage,
                               const EnvConfig& env_config, int episodes, std::uint64_t seed,
                               EvalMode mode) {
  SurrogateEnv env(env_config);
  Rng rng(derive_seed(seed, "eval-actions"));
  CoverageEval out;
  int collisions = 0;
  double total = 0.0;
  for (int ep = 0; ep < episodes; ++ep) {
    RLObservation obs = env.reset(stage, derive_seed(seed, "eval", static_cast<std::uint64_t>(ep)));
    while (!env.done()) {
      const PolicyInput input = encode(obs, policy.arch());
      int a = 0;
      if (mode == EvalMode::UniformRandom) {
        a = uniform_int(rng, 0, 2);
      } else if (mode == EvalMode::MaskedRandom) {
        a = input.forward_allowed ? uniform_int(rng, 0, 2) : uniform_int(rng, 1, 2);
      } else {
        const PolicyOutput o = policy_forward(policy, input);
        a = mode == EvalMode::Greedy ? argmax_action(o) : sample_action(o, rng);
      }
      obs = env.step(static_cast<RLAction>(a)).observation;
    }
    total += env.coverage().covered_fraction();
    if (env.termination() == Termination::Collision) ++collisions;
  }
  out.episodes = episodes;
  if (episodes > 0) {
    out.mean_covered_fraction = total / episodes;
    out.collision_rate = static_cast<double>(collisions) / episodes;
  }
  return out;
}

}  // namespace markersim::rl
