// Core geometry for the marker-search simulator.
//
// Frame: right-handed, z up, ground plane at z = 0. Every module uses this one
// frame; yaw is measured in degrees counter-clockwise from +x.
#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace markersim {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr bool operator==(const Vec3&) const = default;
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }
inline double xy_distance(const Vec3& a, const Vec3& b) { return std::hypot(a.x - b.x, a.y - b.y); }
inline bool is_finite(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

/// Maps any angle in degrees onto [0, 360).
double normalize_yaw(double yaw_deg);

/// Unit heading vector in the xy-plane for a yaw in degrees.
Vec3 heading_vector(double yaw_deg);

/// Position plus attitude. Pitch and roll stay at zero (level flight).
struct Pose6DoF {
  Vec3 position;
  double yaw_deg = 0.0;
  double pitch_deg = 0.0;
  double roll_deg = 0.0;

  bool operator==(const Pose6DoF&) const = default;
};

/// Ground-rooted axis-aligned building volume.
struct BoxObstacle {
  Vec3 min_corner;
  Vec3 max_corner;

  bool operator==(const BoxObstacle&) const = default;
};

/// Closed xy rectangle.
struct Rect {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  bool contains_xy(const Vec3& p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }
  bool operator==(const Rect&) const = default;
};

enum class MapProfileId { ModernCity, PostSoviet, UrbanDistrict };

std::string_view to_string(MapProfileId id);
MapProfileId profile_from_string(std::string_view name);

/// Immutable world: box obstacles, ground plane, and a single marker.
///
/// The constructor enforces: boxes are well-formed and rooted at z = 0, the
/// marker lies inside the bounds, outside every obstacle volume, and on a
/// supporting surface (ground or a box top face).
class Scene {
 public:
  Scene(std::vector<BoxObstacle> obstacles, Vec3 marker_position, Rect bounds,
        MapProfileId profile);

  const std::vector<BoxObstacle>& obstacles() const { return obstacles_; }
  const Vec3& marker_position() const { return marker_; }
  const Rect& bounds() const { return bounds_; }
  MapProfileId profile() const { return profile_; }

  bool operator==(const Scene&) const = default;

 private:
  std::vector<BoxObstacle> obstacles_;
  Vec3 marker_;
  Rect bounds_;
  MapProfileId profile_;
};

/// Distance along a unit ray to the nearest obstacle or ground hit, capped at
/// max_range. Throws ContractViolation for a non-unit direction or
/// non-positive max_range.
double ray_cast(const Scene& scene, const Vec3& origin, const Vec3& direction, double max_range);

/// Ray cast restricted to a caller-provided obstacle subset (plus ground).
/// Used by renderers that cull boxes once per image.
double ray_cast_subset(const std::vector<const BoxObstacle*>& boxes, const Vec3& origin,
                       const Vec3& direction, double max_range);

/// Euclidean distance from a point to a closed box (0 inside).
double point_box_distance(const Vec3& p, const BoxObstacle& box);

/// Minimum distance between segment a→b and a closed box. Exact: the squared
/// distance is piecewise quadratic in the segment parameter, minimized per piece.
double segment_box_distance(const Vec3& a, const Vec3& b, const BoxObstacle& box);

/// True iff a sphere of the given radius swept from `from` to `to` touches any
/// obstacle or dips to z <= drone_radius.
bool swept_collision(const Scene& scene, const Vec3& from, const Vec3& to, double drone_radius);

/// Inclusive xy-only disc membership; z is ignored.
bool point_in_disc(const Vec3& p, const Vec3& center, double radius);

/// Height of the highest surface directly below (x, y): a box top or 0.
double surface_height(const Scene& scene, double x, double y);

}  // namespace markersim
