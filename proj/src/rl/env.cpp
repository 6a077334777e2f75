#include "markersim/rl/env.hpp"

#include <algorithm>
#include <cmath>

#include "markersim/errors.hpp"

namespace markersim::rl {

void RewardConfig::validate() const {
  if (w_cov < 0.0 || w_step < 0.0 || w_rot < 0.0 || w_col < 0.0 || w_bound < 0.0) {
    throw ConfigError("reward config: all weights must be >= 0");
  }
}

CoverageGrid::CoverageGrid(const Vec3& center, double radius, double cell_size)
    : center_(center), radius_(radius), cell_(cell_size) {
  if (!(radius > 0.0) || !(cell_size > 0.0)) {
    throw ContractViolation("coverage grid: radius and cell size must be positive");
  }
  n_ = static_cast<int>(std::ceil(2.0 * radius / cell_size - 1e-9));
  visited_.assign(static_cast<std::size_t>(n_) * n_, 0);
  for (int j = 0; j < n_; ++j) {
    for (int i = 0; i < n_; ++i) in_disc_ += in_disc(i, j) ? 1 : 0;
  }
}

Vec3 CoverageGrid::cell_center(int i, int j) const {
  return {center_.x - radius_ + (i + 0.5) * cell_, center_.y - radius_ + (j + 0.5) * cell_, center_.z};
}

bool CoverageGrid::in_disc(int i, int j) const {
  return point_in_disc(cell_center(i, j), center_, radius_);
}

bool CoverageGrid::visited(int i, int j) const {
  return visited_[static_cast<std::size_t>(j) * n_ + i] != 0;
}

int CoverageGrid::stamp(const Footprint& fp) {
  const double x0 = center_.x - radius_;
  const double y0 = center_.y - radius_;
  const int i_lo = std::max(0, static_cast<int>(std::floor((fp.center.x - fp.radius - x0) / cell_)));
  const int i_hi = std::min(n_ - 1, static_cast<int>(std::floor((fp.center.x + fp.radius - x0) / cell_)));
  const int j_lo = std::max(0, static_cast<int>(std::floor((fp.center.y - fp.radius - y0) / cell_)));
  const int j_hi = std::min(n_ - 1, static_cast<int>(std::floor((fp.center.y + fp.radius - y0) / cell_)));
  int fresh = 0;
  for (int j = j_lo; j <= j_hi; ++j) {
    for (int i = i_lo; i <= i_hi; ++i) {
      auto& cell = visited_[static_cast<std::size_t>(j) * n_ + i];
      if (cell != 0) continue;
      if (!point_in_disc(cell_center(i, j), fp.center, fp.radius)) continue;
      cell = 1;
      if (in_disc(i, j)) ++fresh;
    }
  }
  visited_in_disc_ += fresh;
  return fresh;
}

double CoverageGrid::covered_fraction() const {
  return in_disc_ == 0 ? 0.0 : static_cast<double>(visited_in_disc_) / in_disc_;
}

std::string_view to_string(ObstacleMode mode) {
  switch (mode) {
    case ObstacleMode::None: return "none";
    case ObstacleMode::Sparse: return "sparse";
    case ObstacleMode::Profile: return "profile";
  }
  return "?";
}

ObstacleMode obstacle_mode_from_string(std::string_view name) {
  if (name == "none") return ObstacleMode::None;
  if (name == "sparse") return ObstacleMode::Sparse;
  if (name == "profile") return ObstacleMode::Profile;
  throw ConfigError("unknown obstacle mode '" + std::string(name) + "'");
}

std::vector<CurriculumStage> default_curriculum() {
  return {{0, ObstacleMode::None, 15.0, 20, 0.5},
          {1, ObstacleMode::Sparse, 20.0, 20, 0.4},
          {2, ObstacleMode::Profile, 30.0, 20, -1.0}};
}

void EnvConfig::validate() const {
  reward.validate();
  if (step_budget <= 0 || non_progress_window <= 0) {
    throw ConfigError("env config: step budget and non-progress window must be positive");
  }
  if (!(forward_step > 0.0 && drone_radius > 0.0 && safety_margin >= 0.0 && cell_size > 0.0)) {
    throw ConfigError("env config: invalid step, radius, margin or cell size");
  }
  camera.validate();
  detection.validate();
}

bool forward_path_clear(const DepthImage& depth, double step, double drone_radius, double margin) {
  return depth_cylinder_clear(depth, step + drone_radius + margin, drone_radius + margin);
}

RLObservation make_observation(const DepthImage& depth, const Pose6DoF& pose, const Disc& search,
                               const EnvConfig& config) {
  RLObservation obs;
  obs.depth_width = depth.intrinsics.width;
  obs.depth_height = depth.intrinsics.height;
  obs.depth.resize(depth.ranges.size());
  for (std::size_t i = 0; i < depth.ranges.size(); ++i) {
    obs.depth[i] = std::clamp(depth.ranges[i] / depth.intrinsics.max_range, 0.0, 1.0);
  }
  const Vec3& p = pose.position;
  const double r = search.radius;
  obs.rel_pos = {std::clamp((p.x - search.center.x) / r, -1.0, 1.0),
                 std::clamp((p.y - search.center.y) / r, -1.0, 1.0)};
  obs.boundary_frac = std::clamp((r - xy_distance(p, search.center)) / r, 0.0, 1.0);
  const double yaw = pose.yaw_deg * M_PI / 180.0;
  obs.heading = {std::sin(yaw), std::cos(yaw)};

  const Vec3 ahead = p + heading_vector(pose.yaw_deg) * config.forward_step;
  obs.forward_clear = point_in_disc(ahead, search.center, search.radius) &&
                      forward_path_clear(depth, config.forward_step, config.drone_radius,
                                         config.safety_margin);
  return obs;
}

Action to_agent_action(RLAction a, double forward_step) {
  switch (a) {
    case RLAction::Forward: return Forward{forward_step};
    case RLAction::TurnLeft: return TurnLeft90{};
    case RLAction::TurnRight: return TurnRight90{};
  }
  throw ContractViolation("unknown RL action");
}

namespace {

double sample_altitude(Rng& rng, const StartSamplingParams& p) {
  double alt = normal(rng, p.altitude_mean, p.altitude_sd);
  while (alt < p.altitude_min || alt > p.altitude_max) alt = normal(rng, p.altitude_mean, p.altitude_sd);
  return alt;
}

MapProfile sparse_profile(double radius) {
  MapProfile m;
  m.extent_x = m.extent_y = 2.0 * radius + 20.0;
  m.building_count = {4, 8};
  m.building_footprint = {4.0, 9.0};
  m.building_height = {6.0, 36.0};
  m.layout = LayoutStyle::DenseLowrise;
  m.min_gap = 3.0;
  m.courtyard_radius = 5.0;
  return m;
}

}  // namespace

StageWorld make_stage_world(const CurriculumStage& stage, std::uint64_t seed, const EnvConfig& config) {
  Rng rng(derive_seed(seed, "stage-start"));
  switch (stage.obstacles) {
    case ObstacleMode::None: {
      const double half = stage.search_radius + 20.0;
      Scene scene({}, {half - 1.0, half - 1.0, 0.0}, {-half, -half, half, half},
                  MapProfileId::ModernCity);
      const double alt = sample_altitude(rng, config.start);
      return {std::move(scene), {{0.0, 0.0, alt}, 90.0 * uniform_int(rng, 0, 3), 0.0, 0.0}};
    }
    case ObstacleMode::Sparse: {
      Scene scene = generate_scene(sparse_profile(stage.search_radius), derive_seed(seed, "scene"));
      const double alt = sample_altitude(rng, config.start);
      return {std::move(scene), {{0.0, 0.0, alt}, 90.0 * uniform_int(rng, 0, 3), 0.0, 0.0}};
    }
    case ObstacleMode::Profile: {
      static const MapProfileId ids[] = {MapProfileId::ModernCity, MapProfileId::PostSoviet,
                                         MapProfileId::UrbanDistrict};
      const MapProfile profile = MapProfile::defaults_for(ids[uniform_int(rng, 0, 2)]);
      Scene scene = generate_scene(profile, derive_seed(seed, "scene"));
      const Pose6DoF start = sample_drone_start(scene, stage.search_radius, derive_seed(seed, "start"),
                                                config.start, config.detection);
      return {std::move(scene), start};
    }
  }
  throw ContractViolation("unknown obstacle mode");
}

SurrogateEnv::SurrogateEnv(EnvConfig config) : config_(std::move(config)) { config_.validate(); }

RLObservation SurrogateEnv::observe() const {
  const DepthImage depth = render_depth(world_->scene, state_.pose, config_.camera);
  return make_observation(depth, state_.pose, search_, config_);
}

RLObservation SurrogateEnv::reset(const CurriculumStage& stage, std::uint64_t seed) {
  if (!(stage.search_radius > 0.0)) throw ContractViolation("env reset: search radius must be positive");
  world_ = make_stage_world(stage, seed, config_);
  state_ = DroneState::at(world_->start);
  search_ = {world_->start.position, stage.search_radius};
  grid_.emplace(search_.center, search_.radius, config_.cell_size);
  grid_->stamp(detection_footprint(world_->scene, state_.pose, config_.detection));
  detector_rng_ = Rng(derive_seed(seed, "detector"));
  steps_ = 0;
  idle_steps_ = 0;
  done_ = false;
  termination_.reset();
  return observe();
}

EnvStep SurrogateEnv::step(RLAction action) {
  if (done_) throw ContractViolation("env step: episode is done; call reset");
  const RewardConfig& w = config_.reward;
  EnvStep out;
  out.reward = -w.w_step;
  if (action != RLAction::Forward) out.reward -= w.w_rot;

  const StepOutcome moved = apply_action(state_, to_agent_action(action, config_.forward_step),
                                         world_->scene, search_, config_.drone_radius);
  ++steps_;
  if (moved.result == StepResult::Collided) {
    out.reward -= w.w_col;
    termination_ = Termination::Collision;
  } else if (moved.result == StepResult::BoundaryViolated) {
    out.reward -= w.w_bound;
    termination_ = Termination::Boundary;
  } else {
    state_ = moved.new_state;
    const double before = grid_->covered_fraction();
    out.new_cells = grid_->stamp(detection_footprint(world_->scene, state_.pose, config_.detection));
    out.reward += w.w_cov * (grid_->covered_fraction() - before);
    idle_steps_ = out.new_cells > 0 ? 0 : idle_steps_ + 1;
    if (config_.use_detector &&
        poll_detector(world_->scene, state_.pose, {}, 0.5, config_.detection, detector_rng_, steps_)) {
      termination_ = Termination::Detected;
    } else if (steps_ >= config_.step_budget) {
      termination_ = Termination::StepBudget;
    } else if (idle_steps_ >= config_.non_progress_window) {
      termination_ = Termination::NonProgressive;
    }
  }
  done_ = termination_.has_value();
  out.done = done_;
  out.termination = termination_;
  out.observation = observe();
  return out;
}

}  // namespace markersim::rl
