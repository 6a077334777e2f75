// Lightweight training world for the learned agent: procedurally generated
// scenes, a fixed-altitude 2D action set and a coverage-driven reward.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "markersim/agent.hpp"
#include "markersim/rl/policy.hpp"
#include "markersim/scenario.hpp"

namespace markersim::rl {

struct RewardConfig {
  double w_cov = 10.0;   // per fraction of the disc newly covered
  double w_step = 0.01;
  double w_rot = 0.05;
  double w_col = 1.0;
  double w_bound = 1.0;

  void validate() const;
};

/// Visited cells of the disc's bounding square; only cells whose centers lie
/// in the disc count toward the covered fraction.
class CoverageGrid {
 public:
  CoverageGrid(const Vec3& center, double radius, double cell_size = 1.0);

  /// Marks every cell whose center lies within the footprint; returns the
  /// number of newly visited in-disc cells.
  int stamp(const Footprint& footprint);

  double covered_fraction() const;
  int in_disc_cells() const { return in_disc_; }
  int visited_in_disc() const { return visited_in_disc_; }
  double cell_size() const { return cell_; }
  int cells_per_side() const { return n_; }
  /// Center of cell (i, j), i along x.
  Vec3 cell_center(int i, int j) const;
  bool in_disc(int i, int j) const;
  bool visited(int i, int j) const;

 private:
  Vec3 center_;
  double radius_;
  double cell_;
  int n_;
  std::vector<unsigned char> visited_;
  int in_disc_ = 0;
  int visited_in_disc_ = 0;
};

enum class ObstacleMode { None, Sparse, Profile };

std::string_view to_string(ObstacleMode mode);
ObstacleMode obstacle_mode_from_string(std::string_view name);

struct CurriculumStage {
  int stage_id = 0;
  ObstacleMode obstacles = ObstacleMode::None;
  double search_radius = 15.0;
  int episodes_per_eval = 20;
  double advance_threshold = 0.5;  // mean covered_fraction; negative for the final stage
};

/// Stage 0 empty R15, Stage 1 sparse boxes R20, Stage 2 map profiles R30.
std::vector<CurriculumStage> default_curriculum();

struct EnvConfig {
  RewardConfig reward;
  int step_budget = 500;
  int non_progress_window = 60;   // steps without new cells before stopping
  double forward_step = 2.0;
  double drone_radius = 0.5;
  double safety_margin = 0.25;    // extra clearance used by the forward mask
  double cell_size = 1.0;
  CameraIntrinsics camera = CameraIntrinsics::policy_forward();
  DetectionModelParams detection;
  bool use_detector = false;      // training reward is coverage-only by default
  StartSamplingParams start;

  void validate() const;
};

/// True iff no depth return lies inside the cylinder swept by a forward move
/// of `step` (radius drone_radius + margin, length step + drone_radius + margin).
bool forward_path_clear(const DepthImage& depth, double step, double drone_radius, double margin);

/// Builds the agent observation for a pose inside the search disc.
RLObservation make_observation(const DepthImage& depth, const Pose6DoF& pose, const Disc& search,
                               const EnvConfig& config);

Action to_agent_action(RLAction a, double forward_step);

/// The scene and start pose an env reset would use, without the episode state.
struct StageWorld {
  Scene scene;
  Pose6DoF start;
};

StageWorld make_stage_world(const CurriculumStage& stage, std::uint64_t seed, const EnvConfig& config);

struct EnvStep {
  RLObservation observation;
  double reward = 0.0;
  bool done = false;
  std::optional<Termination> termination;
  int new_cells = 0;
};

class SurrogateEnv {
 public:
  explicit SurrogateEnv(EnvConfig config = {});

  RLObservation reset(const CurriculumStage& stage, std::uint64_t seed);
  /// Throws ContractViolation once the episode is done.
  EnvStep step(RLAction action);

  bool done() const { return done_; }
  const DroneState& state() const { return state_; }
  const Scene& scene() const { return world_->scene; }
  const Disc& search() const { return search_; }
  const CoverageGrid& coverage() const { return *grid_; }
  std::optional<Termination> termination() const { return termination_; }
  int steps() const { return steps_; }
  const EnvConfig& config() const { return config_; }

 private:
  RLObservation observe() const;

  EnvConfig config_;
  std::optional<StageWorld> world_;
  Disc search_;
  DroneState state_;
  std::optional<CoverageGrid> grid_;
  Rng detector_rng_;
  int steps_ = 0;
  int idle_steps_ = 0;
  bool done_ = true;
  std::optional<Termination> termination_;
};

}  // namespace markersim::rl
