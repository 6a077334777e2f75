// Onboard sensing: pinhole depth rendering by ray casting, the downward
// detection footprint, and the parametric marker-detection channel.
#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "markersim/geometry.hpp"
#include "markersim/rng.hpp"

namespace markersim {

enum class CameraOrientation { Forward, Downward };

struct CameraIntrinsics {
  int width = 160;
  int height = 120;
  double horizontal_fov_deg = 90.0;
  double max_range = 40.0;
  CameraOrientation orientation = CameraOrientation::Forward;

  /// Default benchmark forward camera (reduced resolution).
  static CameraIntrinsics benchmark_forward();
  /// Full 640x480 forward preset.
  static CameraIntrinsics full_forward();
  /// 64x64 forward camera seen by the learned policy.
  static CameraIntrinsics policy_forward();

  void validate() const;
  /// Focal length in pixels.
  double focal_px() const;
  bool operator==(const CameraIntrinsics&) const = default;
};

/// Row-major range image; every value lies in [0, max_range].
struct DepthImage {
  CameraIntrinsics intrinsics;
  std::vector<double> ranges;

  double at(int u, int v) const { return ranges[static_cast<std::size_t>(v) * intrinsics.width + u]; }
};

struct PixelWindow {
  int u0 = 0;
  int v0 = 0;
  int width = 0;
  int height = 0;
};

/// Centered window covering `area_fraction` of the image (each side scaled by
/// sqrt(area_fraction)).
PixelWindow central_window(const CameraIntrinsics& intrinsics, double area_fraction);

/// Unit ray through the center of pixel (u, v).
Vec3 pixel_ray(const Pose6DoF& pose, const CameraIntrinsics& intrinsics, int u, int v);

DepthImage render_depth(const Scene& scene, const Pose6DoF& pose, const CameraIntrinsics& intrinsics);

/// Same per-pixel values as render_depth, restricted to a window (row-major).
std::vector<double> render_depth_window(const Scene& scene, const Pose6DoF& pose,
                                        const CameraIntrinsics& intrinsics,
                                        const PixelWindow& window);

/// True iff no depth return lies inside the cylinder of radius `tube` around
/// the optical axis, from the camera out to distance `reach` along the axis.
bool depth_cylinder_clear(const DepthImage& depth, double reach, double tube);

/// Debug dump: text header line pair followed by little-endian float32 ranges.
void write_depth_dump(const std::filesystem::path& path, const DepthImage& image);
DepthImage read_depth_dump(const std::filesystem::path& path);

enum class WeatherKind { Sunny, Foggy, Dusty };

std::string_view to_string(WeatherKind kind);
WeatherKind weather_from_string(std::string_view name);

struct WeatherSpec {
  WeatherKind kind = WeatherKind::Sunny;
  double severity = 0.0;  // [0, 1]; 0 when Sunny

  bool operator==(const WeatherSpec&) const = default;
};

struct DetectionModelParams {
  double base_tp = 0.95;
  double altitude_ref = 15.0;     // m
  double altitude_slope = 0.04;   // 1/m
  double weather_penalty = 0.8;
  double night_floor = 0.6;
  double fp_base = 0.001;         // per poll
  double fp_weather_gain = 1.0;
  double report_noise_sigma = 0.5;  // m
  double effective_half_angle_deg = 15.0;
  double marker_radius = 0.5;     // m

  void validate() const;
};

struct Footprint {
  Vec3 center;  // nadir point on the supporting surface
  double radius = 0.0;
};

/// Disc below the drone inside which the detector can see; radius is the
/// height above the surface directly below times tan(half-angle).
Footprint detection_footprint(const Scene& scene, const Pose6DoF& pose,
                              const DetectionModelParams& params);

/// Marker fully inside the footprint and in line of sight from the drone.
bool marker_in_footprint(const Scene& scene, const Pose6DoF& pose,
                         const DetectionModelParams& params);

/// Lighting multiplier: 1 on [0.3, 0.8], linear down to night_floor at 0 and 1.
double lighting_factor(double time_of_day, double night_floor);

/// Per-poll true-positive probability given the marker is visible.
double tp_probability(double height_above_marker, const WeatherSpec& weather, double time_of_day,
                      const DetectionModelParams& params);

/// Per-poll false-positive probability.
double fp_probability(const WeatherSpec& weather, const DetectionModelParams& params);

enum class DetectionTruth { TruePositive, FalsePositive };

std::string_view to_string(DetectionTruth truth);

struct DetectionEvent {
  int step_index = 0;
  Vec3 reported_position;
  DetectionTruth truth = DetectionTruth::TruePositive;

  bool operator==(const DetectionEvent&) const = default;
};

/// One detector poll. Consumes exactly six draws from `rng` per call so the
/// stream position only depends on the number of polls.
std::optional<DetectionEvent> poll_detector(const Scene& scene, const Pose6DoF& pose,
                                            const WeatherSpec& weather, double time_of_day,
                                            const DetectionModelParams& params, Rng& rng,
                                            int step_index = 0);

}  // namespace markersim
