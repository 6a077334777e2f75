#include "markersim/planners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "markersim/errors.hpp"

namespace markersim {

namespace {

// Pulls a point onto the closed disc so point_in_disc holds bit-exactly.
Vec3 clamp_into_disc(Vec3 p, const Vec3& center, double radius) {
  for (int i = 0; i < 8 && xy_distance(p, center) > radius; ++i) {
    const double d = xy_distance(p, center);
    const double s = (radius / d) * (1.0 - 4e-16 * (i + 1));
    p.x = center.x + (p.x - center.x) * s;
    p.y = center.y + (p.y - center.y) * s;
  }
  return p;
}

// Arc length of r = b * theta from 0 to theta.
double spiral_arc_length(double b, double theta) {
  return 0.5 * b * (theta * std::sqrt(1.0 + theta * theta) + std::asinh(theta));
}

double spiral_theta_at(double b, double s, double theta_max) {
  double lo = 0.0;
  double hi = theta_max;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (spiral_arc_length(b, mid) < s) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Appends points from `from` (exclusive) to `to` (inclusive) at most `step` apart.
void append_segment(std::vector<Vec3>& out, const Vec3& from, const Vec3& to, double step,
                    const Vec3& center, double radius) {
  const double len = xy_distance(from, to);
  if (len <= 0.0) return;
  const int n = std::max(1, static_cast<int>(std::ceil(len / step - 1e-12)));
  for (int i = 1; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    Vec3 p = i == n ? to : from + (to - from) * t;
    out.push_back(clamp_into_disc(p, center, radius));
  }
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  const auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(values.size() - 1)));
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  return values[k];
}

}  // namespace

void PlannerConfig::validate() const {
  if (!(waypoint_step > 0.0 && lane_spacing > 0.0 && climb_increment > 0.0 && max_altitude > 0.0 &&
        clearance_threshold > 0.0)) {
    throw ConfigError("planner config: all distances must be positive");
  }
  if (descent_camera_px < 1) throw ConfigError("planner config: descent_camera_px must be >= 1");
  if (!(clearance_threshold > waypoint_step)) {
    throw ConfigError("planner config: clearance_threshold must exceed waypoint_step");
  }
  camera.validate();
}

std::string_view to_string(Pattern p) { return p == Pattern::Spiral ? "Spiral" : "Zigzag"; }

CoveragePlan plan_spiral(const Vec3& center, double radius, const PlannerConfig& config) {
  if (radius < 0.0) throw ContractViolation("plan_spiral: radius must be >= 0");
  CoveragePlan plan;
  plan.pattern = Pattern::Spiral;
  plan.waypoints.push_back(center);
  if (radius == 0.0) return plan;

  const double b = config.lane_spacing / (2.0 * M_PI);
  const double theta_max = radius / b;
  const double total = spiral_arc_length(b, theta_max);
  auto point_at = [&](double theta) {
    const double r = std::min(b * theta, radius);
    return clamp_into_disc({center.x + r * std::cos(theta), center.y + r * std::sin(theta), center.z},
                           center, radius);
  };
  const int n = static_cast<int>(std::floor(total / config.waypoint_step));
  for (int k = 1; k <= n; ++k) {
    const double s = k * config.waypoint_step;
    plan.waypoints.push_back(point_at(spiral_theta_at(b, s, theta_max)));
  }
  if (total - n * config.waypoint_step > 1e-9) plan.waypoints.push_back(point_at(theta_max));
  for (std::size_t i = 1; i < plan.waypoints.size(); ++i) {
    plan.sweep_length += xy_distance(plan.waypoints[i - 1], plan.waypoints[i]);
  }
  return plan;
}

CoveragePlan plan_zigzag(const Vec3& center, double radius, const PlannerConfig& config) {
  if (radius < 0.0) throw ContractViolation("plan_zigzag: radius must be >= 0");
  CoveragePlan plan;
  plan.pattern = Pattern::Zigzag;
  plan.waypoints.push_back(center);
  if (radius == 0.0) return plan;

  const double s = config.lane_spacing;
  const int lanes = std::max(1, static_cast<int>(std::ceil(2.0 * radius / s - 1e-12)));
  std::vector<double> ys(static_cast<std::size_t>(lanes));
  std::vector<double> half(static_cast<std::size_t>(lanes));
  for (int k = 0; k < lanes; ++k) {
    // A single lane runs through the center; otherwise clip lane offsets to the disc.
    const double y = lanes == 1 ? 0.0 : std::min(-radius + 0.5 * s + k * s, radius);
    ys[static_cast<std::size_t>(k)] = y;
    half[static_cast<std::size_t>(k)] = std::sqrt(std::max(0.0, radius * radius - y * y));
  }

  // Start at whichever extreme lane end lies nearest the center.
  struct Corner {
    int lane;
    double side;
  };
  const Corner candidates[] = {{0, -1.0}, {0, 1.0}, {lanes - 1, -1.0}, {lanes - 1, 1.0}};
  Corner start = candidates[0];
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) {
    const auto k = static_cast<std::size_t>(c.lane);
    const double d = std::hypot(c.side * half[k], ys[k]);
    if (d < best - 1e-12) {
      best = d;
      start = c;
    }
  }
  const int dir = start.lane == 0 ? 1 : -1;
  double side = start.side;

  auto at = [&](double x_off, double y_off) {
    return Vec3{center.x + x_off, center.y + y_off, center.z};
  };
  const double step = config.waypoint_step;
  int lane = start.lane;
  const auto k0 = static_cast<std::size_t>(lane);
  append_segment(plan.waypoints, center, at(side * half[k0], ys[k0]), step, center, radius);
  for (int n = 0; n < lanes; ++n, lane += dir) {
    const auto k = static_cast<std::size_t>(lane);
    const Vec3 lane_end = at(-side * half[k], ys[k]);
    append_segment(plan.waypoints, plan.waypoints.back(), lane_end, step, center, radius);
    plan.sweep_length += 2.0 * half[k];
    side = -side;
    if (n + 1 == lanes) break;
    const auto kn = static_cast<std::size_t>(lane + dir);
    // Transition: leg along y first when the next lane is longer, else along x first.
    const Vec3 next_start = at(side * half[kn], ys[kn]);
    const Vec3 corner = half[kn] >= half[k] ? at(side * half[k], ys[kn]) : at(side * half[kn], ys[k]);
    append_segment(plan.waypoints, plan.waypoints.back(), corner, step, center, radius);
    append_segment(plan.waypoints, plan.waypoints.back(), next_start, step, center, radius);
  }
  return plan;
}

PlannerController::PlannerController(CoveragePlan plan, PlannerVariant variant, PlannerConfig config)
    : plan_(std::move(plan)), variant_(variant), config_(std::move(config)) {
  if (plan_.waypoints.empty()) throw ContractViolation("planner_controller: plan must be nonempty");
  config_.validate();
  window_ = central_window(config_.camera, config_.window_fraction);
  cruise_altitude_ = plan_.waypoints.front().z;
}

bool PlannerController::blocked_toward(const SensorView& sensors, const Vec3& target) const {
  const Vec3& p = sensors.pose().position;
  const double yaw = normalize_yaw(std::atan2(target.y - p.y, target.x - p.x) * 180.0 / M_PI);
  const auto window = sensors.forward_window(config_.camera, window_, yaw);
  return percentile(window, config_.window_percentile) < config_.clearance_threshold;
}

Decision PlannerController::next_action(const SensorView& sensors, const DroneState& state) {
  const Vec3& p = state.pose.position;
  while (next_ < plan_.waypoints.size() && xy_distance(plan_.waypoints[next_], p) < 1e-9) {
    ++next_;
    hold_altitude_ = false;
  }
  if (next_ >= plan_.waypoints.size()) return Decision::halt(Termination::PlanExhausted);
  const Vec3& target = plan_.waypoints[next_];

  if (variant_ == PlannerVariant::Flat2D) {
    ++next_;
    return Decision::act(MoveToWaypoint{{target.x, target.y, cruise_altitude_}});
  }

  if (p.z > cruise_altitude_ + 1e-9 && !hold_altitude_) {
    const double drop = std::min(config_.climb_increment, p.z - cruise_altitude_);
    const double reach = drop + config_.drone_radius + config_.descend_margin;
    const CameraIntrinsics probe{config_.descent_camera_px, config_.descent_camera_px, 90.0, reach + 1.0,
                                 CameraOrientation::Downward};
    if (depth_cylinder_clear(sensors.downward_depth(probe), reach,
                             config_.drone_radius + config_.descend_margin)) {
      return Decision::act(Descend{drop});
    }
  }
  if (blocked_toward(sensors, target)) {
    // Stay at the raised altitude until this waypoint is reached.
    hold_altitude_ = true;
    if (p.z + config_.climb_increment > config_.max_altitude + 1e-9) {
      return Decision::halt(Termination::PlanExhausted);
    }
    return Decision::act(Climb{config_.climb_increment});
  }
  ++next_;
  hold_altitude_ = false;
  return Decision::act(MoveToWaypoint{{target.x, target.y, p.z}});
}

std::unique_ptr<Controller> planner_controller(CoveragePlan plan, PlannerVariant variant,
                                               const PlannerConfig& config) {
  return std::make_unique<PlannerController>(std::move(plan), variant, config);
}

}  // namespace markersim
