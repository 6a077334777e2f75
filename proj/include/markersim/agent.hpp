// Drone state, discrete actions and the episode loop shared by every method.
#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "markersim/geometry.hpp"
#include "markersim/rng.hpp"
#include "markersim/scenario.hpp"
#include "markersim/sensors.hpp"

namespace markersim {

struct Forward {
  double step = 2.0;
  bool operator==(const Forward&) const = default;
};
struct TurnLeft90 {
  bool operator==(const TurnLeft90&) const = default;
};
struct TurnRight90 {
  bool operator==(const TurnRight90&) const = default;
};
struct Climb {
  double step = 5.0;
  bool operator==(const Climb&) const = default;
};
struct Descend {
  double step = 5.0;
  bool operator==(const Descend&) const = default;
};
struct MoveToWaypoint {
  Vec3 target;
  bool operator==(const MoveToWaypoint&) const = default;
};

using Action = std::variant<Forward, TurnLeft90, TurnRight90, Climb, Descend, MoveToWaypoint>;

std::string describe(const Action& action);

struct Disc {
  Vec3 center;
  double radius = 30.0;
};

struct DroneState {
  Pose6DoF pose;
  Vec3 start_position;
  int steps_taken = 0;
  double path_xy_length = 0.0;
  bool alive = true;

  static DroneState at(const Pose6DoF& start);
};

enum class StepResult { Moved, Collided, BoundaryViolated };

struct StepOutcome {
  StepResult result = StepResult::Moved;
  DroneState new_state;
};

/// Turns rotate in place with no checks. Translations are rejected (state
/// marked dead, pose unchanged) if the swept sphere collides or the
/// destination leaves the search disc. MoveToWaypoint also yaws toward the
/// horizontal direction of travel.
StepOutcome apply_action(const DroneState& state, const Action& action, const Scene& scene,
                         const Disc& search, double drone_radius = 0.5);

enum class Termination { Detected, PlanExhausted, Collision, Boundary, StepBudget, NonProgressive };

std::string_view to_string(Termination t);
Termination termination_from_string(std::string_view name);

/// Read-only sensor access for controllers; images are rendered on request.
class SensorView {
 public:
  SensorView(const Scene& scene, const Pose6DoF& pose, const Disc& search)
      : scene_(&scene), pose_(pose), search_(search) {}

  const Pose6DoF& pose() const { return pose_; }
  const Disc& search_disc() const { return search_; }

  /// Forward depth with the camera yawed to `yaw_deg` (defaults to the pose yaw).
  DepthImage forward_depth(const CameraIntrinsics& intrinsics,
                           std::optional<double> yaw_deg = std::nullopt) const;
  std::vector<double> forward_window(const CameraIntrinsics& intrinsics, const PixelWindow& window,
                                     std::optional<double> yaw_deg = std::nullopt) const;
  /// Downward camera image (the intrinsics' orientation is forced to Downward).
  DepthImage downward_depth(CameraIntrinsics intrinsics) const;
  /// Nadir sample of the downward depth camera.
  double downward_range(double max_range) const;
  /// Downward footprint from the current pose.
  Footprint footprint(const DetectionModelParams& params) const;

 private:
  const Scene* scene_;
  Pose6DoF pose_;
  Disc search_;
};

/// What a controller wants next: an action, or a declared stop.
struct Decision {
  std::optional<Action> action;
  Termination stop = Termination::PlanExhausted;  // used when no action

  static Decision act(Action a) { return {std::move(a), Termination::PlanExhausted}; }
  static Decision halt(Termination t) { return {std::nullopt, t}; }
};

class Controller {
 public:
  virtual ~Controller() = default;
  virtual Decision next_action(const SensorView& sensors, const DroneState& state) = 0;
};

struct EpisodeRecord {
  std::string scenario_id;
  std::string method;
  std::vector<Vec3> trajectory;  // one entry per executed action, plus the start
  std::vector<Action> actions;   // includes a final rejected action, if any
  std::optional<DetectionEvent> detection;
  Termination termination = Termination::StepBudget;
  Vec3 final_position;
  double path_xy_length = 0.0;
};

struct EpisodeConfig {
  int step_budget = 500;
  double drone_radius = 0.5;
};

/// Each iteration: poll the detector (stop on any event), then stop on budget,
/// then ask the controller and apply its action.
EpisodeRecord run_episode(const Scenario& scenario, Controller& controller,
                          const DetectionModelParams& detection, const EpisodeConfig& config,
                          Rng& rng, const std::string& method = "");

/// Sum of xy segment lengths; used to cross-check path_xy_length.
double trajectory_xy_length(const std::vector<Vec3>& trajectory);

}  // namespace markersim
