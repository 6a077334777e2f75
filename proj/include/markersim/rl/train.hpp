// Curriculum PPO training loop, checkpoints and the training log.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "markersim/rl/env.hpp"
#include "markersim/rl/policy.hpp"
#include "markersim/rl/ppo.hpp"

namespace markersim::rl {

struct TrainConfig {
  PolicyArch arch;
  PPOConfig ppo;
  EnvConfig env;
  std::vector<CurriculumStage> curriculum = default_curriculum();
  int total_updates = 200;
  int horizon = 2048;  // environment steps per rollout
  std::uint64_t seed = 7;

  void validate() const;
  /// Canonical JSON text of every field; hashed into checkpoints.
  std::string canonical_json() const;
  std::string digest() const;
};

/// Reads a JSON training config; absent keys keep their defaults.
TrainConfig parse_train_config(const std::string& json_text);

struct TrainLogRow {
  int update = 0;
  int stage = 0;
  int episodes = 0;               // completed in this rollout
  double mean_return = 0.0;       // over completed episodes (0 if none)
  double covered_fraction = 0.0;  // mean over completed episodes (0 if none)
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

struct TrainResult {
  Policy policy;
  std::vector<TrainLogRow> log;
  int final_stage = 0;
  bool diverged = false;
  std::string message;
};

/// Rollout, update, and stage advance when the mean covered_fraction of the
/// last episodes_per_eval training episodes reaches the stage threshold. On a
/// numeric failure returns the last good parameters with diverged = true.
TrainResult train(const TrainConfig& config);

std::string training_log_csv(const std::vector<TrainLogRow>& log);

// Checkpoint: {"schema": "markersim.checkpoint/1", "arch": {...},
// "config_digest": hex, "params": [...]}.
inline constexpr const char* kCheckpointSchema = "markersim.checkpoint/1";

struct Checkpoint {
  Policy policy;
  std::string config_digest;
};

std::string serialize_checkpoint(const Policy& policy, const std::string& config_digest);
Checkpoint parse_checkpoint(const std::string& text);
void write_checkpoint(const std::filesystem::path& path, const Policy& policy,
                      const std::string& config_digest);
Checkpoint read_checkpoint(const std::filesystem::path& path);

// UniformRandom ignores the safety mask; MaskedRandom picks uniformly among allowed actions.
enum class EvalMode { Greedy, Sampled, UniformRandom, MaskedRandom };

struct CoverageEval {
  double mean_covered_fraction = 0.0;
  double collision_rate = 0.0;
  int episodes = 0;
};

/// Runs full episodes on a stage with seeds derived from `seed`.
CoverageEval evaluate_coverage(const Policy& policy, const CurriculumStage& stage,
                               const EnvConfig& env, int episodes, std::uint64_t seed,
                               EvalMode mode);

}  // namespace markersim::rl
