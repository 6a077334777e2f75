#include "markersim/sensors.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include "markersim/errors.hpp"

namespace markersim {

namespace {

std::vector<const BoxObstacle*> cull_boxes(const Scene& scene, const Vec3& origin, double max_range) {
  std::vector<const BoxObstacle*> out;
  for (const auto& box : scene.obstacles()) {
    if (point_box_distance(origin, box) <= max_range) out.push_back(&box);
  }
  return out;
}

struct CameraBasis {
  Vec3 axis;
  Vec3 right;
  Vec3 down;  // image v direction
};

CameraBasis camera_basis(const Pose6DoF& pose, CameraOrientation orientation) {
  if (pose.pitch_deg != 0.0 || pose.roll_deg != 0.0) {
    throw ContractViolation("render_depth: pitch and roll must be zero");
  }
  const Vec3 heading = heading_vector(pose.yaw_deg);
  const Vec3 right{heading.y, -heading.x, 0.0};
  if (orientation == CameraOrientation::Forward) return {heading, right, {0.0, 0.0, -1.0}};
  return {{0.0, 0.0, -1.0}, right, heading * -1.0};
}

Vec3 basis_ray(const CameraBasis& b, const CameraIntrinsics& in, double f, int u, int v) {
  const double xc = (u + 0.5 - 0.5 * in.width) / f;
  const double yc = (v + 0.5 - 0.5 * in.height) / f;
  const Vec3 d = b.axis + b.right * xc + b.down * yc;
  return d * (1.0 / norm(d));
}

}  // namespace

CameraIntrinsics CameraIntrinsics::benchmark_forward() {
  return {160, 120, 90.0, 40.0, CameraOrientation::Forward};
}

CameraIntrinsics CameraIntrinsics::full_forward() {
  return {640, 480, 90.0, 40.0, CameraOrientation::Forward};
}

CameraIntrinsics CameraIntrinsics::policy_forward() {
  return {64, 64, 90.0, 12.0, CameraOrientation::Forward};
}

void CameraIntrinsics::validate() const {
  if (width < 1 || height < 1) throw ConfigError("camera: width and height must be >= 1");
  if (!(horizontal_fov_deg > 0.0 && horizontal_fov_deg < 180.0)) {
    throw ConfigError("camera: fov must lie in (0, 180)");
  }
  if (!(max_range > 0.0)) throw ConfigError("camera: max_range must be positive");
}

double CameraIntrinsics::focal_px() const {
  return 0.5 * width / std::tan(0.5 * horizontal_fov_deg * M_PI / 180.0);
}

PixelWindow central_window(const CameraIntrinsics& in, double area_fraction) {
  const double side = std::sqrt(std::clamp(area_fraction, 0.0, 1.0));
  const int w = std::max(1, static_cast<int>(std::lround(in.width * side)));
  const int h = std::max(1, static_cast<int>(std::lround(in.height * side)));
  return {(in.width - w) / 2, (in.height - h) / 2, w, h};
}

Vec3 pixel_ray(const Pose6DoF& pose, const CameraIntrinsics& in, int u, int v) {
  return basis_ray(camera_basis(pose, in.orientation), in, in.focal_px(), u, v);
}

DepthImage render_depth(const Scene& scene, const Pose6DoF& pose, const CameraIntrinsics& in) {
  in.validate();
  DepthImage img{in, {}};
  img.ranges = render_depth_window(scene, pose, in, {0, 0, in.width, in.height});
  return img;
}

std::vector<double> render_depth_window(const Scene& scene, const Pose6DoF& pose,
                                        const CameraIntrinsics& in, const PixelWindow& win) {
  in.validate();
  const CameraBasis basis = camera_basis(pose, in.orientation);
  const double f = in.focal_px();
  const auto boxes = cull_boxes(scene, pose.position, in.max_range);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(win.width) * win.height);
  for (int v = win.v0; v < win.v0 + win.height; ++v) {
    for (int u = win.u0; u < win.u0 + win.width; ++u) {
      const Vec3 dir = basis_ray(basis, in, f, u, v);
      out.push_back(ray_cast_subset(boxes, pose.position, dir, in.max_range));
    }
  }
  return out;
}

bool depth_cylinder_clear(const DepthImage& depth, double reach, double tube) {
  const CameraIntrinsics& in = depth.intrinsics;
  const double f = in.focal_px();
  for (int v = 0; v < in.height; ++v) {
    const double yc = (v + 0.5 - 0.5 * in.height) / f;
    for (int u = 0; u < in.width; ++u) {
      const double range = depth.at(u, v);
      if (range >= in.max_range) continue;
      const double xc = (u + 0.5 - 0.5 * in.width) / f;
      const double inv = 1.0 / std::sqrt(1.0 + xc * xc + yc * yc);
      // Hit point in camera coordinates: along the axis and off it.
      if (range * inv <= reach && range * inv * std::hypot(xc, yc) <= tube) return false;
    }
  }
  return true;
}

void write_depth_dump(const std::filesystem::path& path, const DepthImage& image) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const auto& in = image.intrinsics;
  out << "markersim-depth 1\n"
      << "width " << in.width << " height " << in.height << " hfov " << in.horizontal_fov_deg
      << " max_range " << in.max_range << " orientation "
      << (in.orientation == CameraOrientation::Forward ? "Forward" : "Downward") << "\n";
  for (double r : image.ranges) {
    const float f = static_cast<float>(r);
    unsigned char bytes[4];
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(bytes), 4);
  }
}

DepthImage read_depth_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string magic;
  std::getline(in, magic);
  if (magic != "markersim-depth 1") throw DataError("depth dump: bad header");
  std::string header;
  std::getline(in, header);
  std::istringstream fields(header);
  std::string k1, k2, k3, k4, k5, orient;
  DepthImage img;
  fields >> k1 >> img.intrinsics.width >> k2 >> img.intrinsics.height >> k3 >>
      img.intrinsics.horizontal_fov_deg >> k4 >> img.intrinsics.max_range >> k5 >> orient;
  if (!fields) throw DataError("depth dump: bad dimension line");
  img.intrinsics.orientation =
      orient == "Downward" ? CameraOrientation::Downward : CameraOrientation::Forward;
  const std::size_t n = static_cast<std::size_t>(img.intrinsics.width) * img.intrinsics.height;
  img.ranges.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw DataError("depth dump: truncated");
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[b]) << (8 * b);
    float f;
    std::memcpy(&f, &bits, 4);
    img.ranges[i] = f;
  }
  return img;
}

std::string_view to_string(WeatherKind kind) {
  switch (kind) {
    case WeatherKind::Sunny: return "Sunny";
    case WeatherKind::Foggy: return "Foggy";
    case WeatherKind::Dusty: return "Dusty";
  }
  return "Unknown";
}

WeatherKind weather_from_string(std::string_view name) {
  if (name == "Sunny") return WeatherKind::Sunny;
  if (name == "Foggy") return WeatherKind::Foggy;
  if (name == "Dusty") return WeatherKind::Dusty;
  throw DataError("unknown weather kind '" + std::string(name) + "'");
}

std::string_view to_string(DetectionTruth truth) {
  return truth == DetectionTruth::TruePositive ? "TruePositive" : "FalsePositive";
}

void DetectionModelParams::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(base_tp) || !prob(fp_base) || !prob(night_floor) || !prob(weather_penalty)) {
    throw ConfigError("detection params: probabilities must lie in [0, 1]");
  }
  if (report_noise_sigma < 0.0) throw ConfigError("detection params: sigma must be >= 0");
  if (!(effective_half_angle_deg > 0.0 && effective_half_angle_deg < 90.0)) {
    throw ConfigError("detection params: half-angle must lie in (0, 90)");
  }
}

Footprint detection_footprint(const Scene& scene, const Pose6DoF& pose,
                              const DetectionModelParams& params) {
  const Vec3& p = pose.position;
  const double surface = surface_height(scene, p.x, p.y);
  const double h = std::max(0.0, p.z - surface);
  return {{p.x, p.y, surface}, h * std::tan(params.effective_half_angle_deg * M_PI / 180.0)};
}

bool marker_in_footprint(const Scene& scene, const Pose6DoF& pose,
                         const DetectionModelParams& params) {
  const Footprint fp = detection_footprint(scene, pose, params);
  const Vec3& marker = scene.marker_position();
  if (xy_distance(marker, fp.center) + params.marker_radius > fp.radius) return false;
  const Vec3 to_marker = marker - pose.position;
  const double dist = norm(to_marker);
  if (dist < 1e-9) return true;
  return ray_cast(scene, pose.position, to_marker * (1.0 / dist), dist) >= dist - 1e-6;
}

double lighting_factor(double t, double night_floor) {
  if (t < 0.3) return night_floor + (1.0 - night_floor) * std::max(0.0, t) / 0.3;
  if (t > 0.8) return night_floor + (1.0 - night_floor) * std::max(0.0, 1.0 - t) / 0.2;
  return 1.0;
}

double tp_probability(double height_above_marker, const WeatherSpec& weather, double time_of_day,
                      const DetectionModelParams& params) {
  const double altitude_term = std::clamp(
      1.0 - params.altitude_slope * std::max(0.0, height_above_marker - params.altitude_ref), 0.2,
      1.0);
  const double weather_term = 1.0 - params.weather_penalty * weather.severity;
  const double p = params.base_tp * altitude_term * weather_term *
                   lighting_factor(time_of_day, params.night_floor);
  return std::clamp(p, 0.0, 1.0);
}

double fp_probability(const WeatherSpec& weather, const DetectionModelParams& params) {
  return std::clamp(params.fp_base * (1.0 + params.fp_weather_gain * weather.severity), 0.0, 1.0);
}

std::optional<DetectionEvent> poll_detector(const Scene& scene, const Pose6DoF& pose,
                                            const WeatherSpec& weather, double time_of_day,
                                            const DetectionModelParams& params, Rng& rng,
                                            int step_index) {
  const double u_tp = uniform(rng, 0.0, 1.0);
  const double n1 = normal(rng, 0.0, 1.0);
  const double n2 = normal(rng, 0.0, 1.0);
  const double u_fp = uniform(rng, 0.0, 1.0);
  const double u_r = uniform(rng, 0.0, 1.0);
  const double u_theta = uniform(rng, 0.0, 1.0);

  const Footprint fp = detection_footprint(scene, pose, params);
  const Vec3& marker = scene.marker_position();
  const bool visible = marker_in_footprint(scene, pose, params);
  const bool tp_fires =
      visible && u_tp < tp_probability(pose.position.z - marker.z, weather, time_of_day, params);
  const bool fp_fires = u_fp < fp_probability(weather, params);

  if (tp_fires) {
    double x = marker.x + params.report_noise_sigma * n1;
    double y = marker.y + params.report_noise_sigma * n2;
    // Reports always lie inside the footprint.
    const double dx = x - fp.center.x;
    const double dy = y - fp.center.y;
    const double r = std::hypot(dx, dy);
    if (r > fp.radius && r > 0.0) {
      x = fp.center.x + dx * fp.radius / r;
      y = fp.center.y + dy * fp.radius / r;
    }
    // z from the downward depth sample under the reported xy.
    return DetectionEvent{step_index, {x, y, surface_height(scene, x, y)},
                          DetectionTruth::TruePositive};
  }
  if (fp_fires) {
    const double r = fp.radius * std::sqrt(u_r);
    const double theta = 2.0 * M_PI * u_theta;
    const double x = fp.center.x + r * std::cos(theta);
    const double y = fp.center.y + r * std::sin(theta);
    return DetectionEvent{step_index, {x, y, surface_height(scene, x, y)},
                          DetectionTruth::FalsePositive};
  }
  return std::nullopt;
}

}  // namespace markersim
