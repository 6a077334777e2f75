#include "markersim/agent.hpp"

#include <cmath>

#include "markersim/errors.hpp"
#include "markersim/scene_io.hpp"

namespace markersim {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

std::string describe(const Action& action) {
  return std::visit(
      Overloaded{
          [](const Forward& a) { return "Forward(" + format_double(a.step) + ")"; },
          [](const TurnLeft90&) { return std::string("TurnLeft90"); },
          [](const TurnRight90&) { return std::string("TurnRight90"); },
          [](const Climb& a) { return "Climb(" + format_double(a.step) + ")"; },
          [](const Descend& a) { return "Descend(" + format_double(a.step) + ")"; },
          [](const MoveToWaypoint& a) {
            return "MoveToWaypoint(" + format_double(a.target.x) + ", " +
                   format_double(a.target.y) + ", " + format_double(a.target.z) + ")";
          },
      },
      action);
}

DroneState DroneState::at(const Pose6DoF& start) {
  DroneState s;
  s.pose = start;
  s.pose.yaw_deg = normalize_yaw(start.yaw_deg);
  s.start_position = start.position;
  return s;
}

StepOutcome apply_action(const DroneState& state, const Action& action, const Scene& scene,
                         const Disc& search, double drone_radius) {
  if (!state.alive) throw ContractViolation("apply_action: drone is not alive");

  DroneState next = state;
  next.steps_taken += 1;

  auto rotate = [&](double delta) {
    next.pose.yaw_deg = normalize_yaw(state.pose.yaw_deg + delta);
    return StepOutcome{StepResult::Moved, next};
  };
  if (std::holds_alternative<TurnLeft90>(action)) return rotate(90.0);
  if (std::holds_alternative<TurnRight90>(action)) return rotate(-90.0);

  const Vec3& from = state.pose.position;
  Vec3 to = from;
  double yaw = state.pose.yaw_deg;
  std::visit(Overloaded{
                 [&](const Forward& a) { to = from + heading_vector(state.pose.yaw_deg) * a.step; },
                 [&](const Climb& a) { to.z += a.step; },
                 [&](const Descend& a) { to.z -= a.step; },
                 [&](const MoveToWaypoint& a) {
                   to = a.target;
                   const double dx = to.x - from.x;
                   const double dy = to.y - from.y;
                   if (std::hypot(dx, dy) > 1e-12) {
                     yaw = normalize_yaw(std::atan2(dy, dx) * 180.0 / M_PI);
                   }
                 },
                 [](const auto&) {},
             },
             action);

  if (swept_collision(scene, from, to, drone_radius)) {
    DroneState dead = state;
    dead.alive = false;
    return {StepResult::Collided, dead};
  }
  if (!point_in_disc(to, search.center, search.radius)) {
    DroneState dead = state;
    dead.alive = false;
    return {StepResult::BoundaryViolated, dead};
  }
  next.pose.position = to;
  next.pose.yaw_deg = yaw;
  next.path_xy_length += std::hypot(to.x - from.x, to.y - from.y);
  return {StepResult::Moved, next};
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Detected: return "Detected";
    case Termination::PlanExhausted: return "PlanExhausted";
    case Termination::Collision: return "Collision";
    case Termination::Boundary: return "Boundary";
    case Termination::StepBudget: return "StepBudget";
    case Termination::NonProgressive: return "NonProgressive";
  }
  return "Unknown";
}

Termination termination_from_string(std::string_view name) {
  for (auto t : {Termination::Detected, Termination::PlanExhausted, Termination::Collision,
                 Termination::Boundary, Termination::StepBudget, Termination::NonProgressive}) {
    if (to_string(t) == name) return t;
  }
  throw DataError("unknown termination '" + std::string(name) + "'");
}

DepthImage SensorView::forward_depth(const CameraIntrinsics& intrinsics,
                                     std::optional<double> yaw_deg) const {
  Pose6DoF p = pose_;
  if (yaw_deg) p.yaw_deg = *yaw_deg;
  return render_depth(*scene_, p, intrinsics);
}

std::vector<double> SensorView::forward_window(const CameraIntrinsics& intrinsics,
                                               const PixelWindow& window,
                                               std::optional<double> yaw_deg) const {
  Pose6DoF p = pose_;
  if (yaw_deg) p.yaw_deg = *yaw_deg;
  return render_depth_window(*scene_, p, intrinsics, window);
}

DepthImage SensorView::downward_depth(CameraIntrinsics intrinsics) const {
  intrinsics.orientation = CameraOrientation::Downward;
  return render_depth(*scene_, pose_, intrinsics);
}

double SensorView::downward_range(double max_range) const {
  return ray_cast(*scene_, pose_.position, {0.0, 0.0, -1.0}, max_range);
}

Footprint SensorView::footprint(const DetectionModelParams& params) const {
  return detection_footprint(*scene_, pose_, params);
}

EpisodeRecord run_episode(const Scenario& scenario, Controller& controller,
                          const DetectionModelParams& detection, const EpisodeConfig& config,
                          Rng& rng, const std::string& method) {
  if (config.step_budget <= 0) throw ContractViolation("run_episode: step budget must be positive");
  const Scene& scene = scenario.scene;
  const Disc search{scenario.drone_start.position, scenario.search_radius};

  EpisodeRecord rec;
  rec.scenario_id = scenario.scenario_id;
  rec.method = method;
  DroneState state = DroneState::at(scenario.drone_start);
  rec.trajectory.push_back(state.pose.position);

  for (int step = 0;; ++step) {
    if (auto event = poll_detector(scene, state.pose, scenario.weather, scenario.time_of_day,
                                   detection, rng, step)) {
      rec.detection = *event;
      rec.termination = Termination::Detected;
      break;
    }
    if (step >= config.step_budget) {
      rec.termination = Termination::StepBudget;
      break;
    }
    const SensorView view(scene, state.pose, search);
    Decision decision = controller.next_action(view, state);
    if (!decision.action) {
      rec.termination = decision.stop == Termination::NonProgressive ? Termination::NonProgressive
                                                                      : Termination::PlanExhausted;
      break;
    }
    rec.actions.push_back(*decision.action);
    const StepOutcome out = apply_action(state, *decision.action, scene, search, config.drone_radius);
    if (out.result == StepResult::Collided) {
      rec.termination = Termination::Collision;
      break;
    }
    if (out.result == StepResult::BoundaryViolated) {
      rec.termination = Termination::Boundary;
      break;
    }
    state = out.new_state;
    rec.trajectory.push_back(state.pose.position);
  }
  rec.final_position = rec.trajectory.back();
  rec.path_xy_length = state.path_xy_length;
  return rec;
}

double trajectory_xy_length(const std::vector<Vec3>& trajectory) {
  double total = 0.0;
  for (std::size_t i = 1; i < trajectory.size(); ++i) {
    total += std::hypot(trajectory[i].x - trajectory[i - 1].x, trajectory[i].y - trajectory[i - 1].y);
  }
  return total;
}

}  // namespace markersim
