// Spiral and zigzag coverage patterns over the search disc, and the 2D/3D
// waypoint-following controllers built on them.
#pragma once

#include <memory>
#include <string_view>
#include <vector>

#include "markersim/agent.hpp"
#include "markersim/geometry.hpp"
#include "markersim/sensors.hpp"

namespace markersim {

struct PlannerConfig {
  double waypoint_step = 5.0;
  double lane_spacing = 5.0;
  double climb_increment = 5.0;
  double max_altitude = 40.0;
  double clearance_threshold = 6.0;
  double window_fraction = 0.25;   // central share of the forward image area
  double window_percentile = 0.05; // robust minimum inside the window
  double descend_margin = 1.0;     // extra clearance around the descent path
  int descent_camera_px = 33;      // downward probe resolution (square, 90 deg)
  double drone_radius = 0.5;
  CameraIntrinsics camera = CameraIntrinsics::benchmark_forward();

  void validate() const;
};

enum class Pattern { Spiral, Zigzag };

std::string_view to_string(Pattern p);

struct CoveragePlan {
  std::vector<Vec3> waypoints;  // all at the center's altitude
  Pattern pattern = Pattern::Spiral;
  double sweep_length = 0.0;    // spiral: arc length; zigzag: summed lane lengths
};

/// Archimedean spiral r = (lane_spacing / 2pi) * theta from the center out to
/// `radius`, sampled every waypoint_step of arc length. Waypoints keep center.z.
CoveragePlan plan_spiral(const Vec3& center, double radius, const PlannerConfig& config);

/// Boustrophedon over disc chords parallel to x, lanes every lane_spacing,
/// starting at the lane end nearest the center; transitions stay inside the disc.
CoveragePlan plan_zigzag(const Vec3& center, double radius, const PlannerConfig& config);

enum class PlannerVariant { Flat2D, Climb3D };

/// Follows a plan with MoveToWaypoint actions. Climb3D inspects the forward
/// depth window toward the next waypoint and climbs while it is blocked,
/// descending back to cruise altitude once a downward depth probe shows the
/// descent column clear.
class PlannerController : public Controller {
 public:
  PlannerController(CoveragePlan plan, PlannerVariant variant, PlannerConfig config);

  Decision next_action(const SensorView& sensors, const DroneState& state) override;

  const CoveragePlan& plan() const { return plan_; }

 private:
  bool blocked_toward(const SensorView& sensors, const Vec3& target) const;

  CoveragePlan plan_;
  PlannerVariant variant_;
  PlannerConfig config_;
  PixelWindow window_;
  double cruise_altitude_;
  std::size_t next_ = 0;
  bool hold_altitude_ = false;
};

std::unique_ptr<Controller> planner_controller(CoveragePlan plan, PlannerVariant variant,
                                               const PlannerConfig& config);

}  // namespace markersim
