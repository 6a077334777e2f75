#include "markersim/geometry.hpp"

#include <algorithm>
#include <array>
#include <limits>

#include "markersim/errors.hpp"

namespace markersim {

namespace {

constexpr double kUnitTolerance = 1e-6;
constexpr double kSurfaceTolerance = 1e-9;

// Entry distance of a ray into a box, or +inf on miss. 0 when the origin is inside.
double slab_entry(const BoxObstacle& box, const Vec3& o, const Vec3& d) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  const std::array<double, 3> origin{o.x, o.y, o.z};
  const std::array<double, 3> dir{d.x, d.y, d.z};
  const std::array<double, 3> lo{box.min_corner.x, box.min_corner.y, box.min_corner.z};
  const std::array<double, 3> hi{box.max_corner.x, box.max_corner.y, box.max_corner.z};
  for (int axis = 0; axis < 3; ++axis) {
    if (dir[axis] == 0.0) {
      if (origin[axis] < lo[axis] || origin[axis] > hi[axis]) {
        return std::numeric_limits<double>::infinity();
      }
      continue;
    }
    const double inv = 1.0 / dir[axis];
    double t1 = (lo[axis] - origin[axis]) * inv;
    double t2 = (hi[axis] - origin[axis]) * inv;
    if (t1 > t2) std::swap(t1, t2);
    t_near = std::max(t_near, t1);
    t_far = std::min(t_far, t2);
    if (t_near > t_far) return std::numeric_limits<double>::infinity();
  }
  if (t_far < 0.0) return std::numeric_limits<double>::infinity();
  return std::max(t_near, 0.0);
}

double ground_entry(const Vec3& o, const Vec3& d) {
  if (o.z <= 0.0) return 0.0;
  if (d.z >= 0.0) return std::numeric_limits<double>::infinity();
  return o.z / -d.z;
}

void check_ray_args(const Vec3& direction, double max_range) {
  if (!(max_range > 0.0)) throw ContractViolation("ray_cast: max_range must be positive");
  if (std::abs(norm(direction) - 1.0) > kUnitTolerance) {
    throw ContractViolation("ray_cast: direction must have unit norm");
  }
}

}  // namespace

double normalize_yaw(double yaw_deg) {
  double y = std::fmod(yaw_deg, 360.0);
  if (y < 0.0) y += 360.0;
  if (y >= 360.0) y = 0.0;
  return y;
}

Vec3 heading_vector(double yaw_deg) {
  // Exact values on the axis-aligned headings the discrete actions produce.
  const double y = normalize_yaw(yaw_deg);
  if (y == 0.0) return {1.0, 0.0, 0.0};
  if (y == 90.0) return {0.0, 1.0, 0.0};
  if (y == 180.0) return {-1.0, 0.0, 0.0};
  if (y == 270.0) return {0.0, -1.0, 0.0};
  const double r = y * M_PI / 180.0;
  return {std::cos(r), std::sin(r), 0.0};
}

std::string_view to_string(MapProfileId id) {
  switch (id) {
    case MapProfileId::ModernCity: return "ModernCity";
    case MapProfileId::PostSoviet: return "PostSoviet";
    case MapProfileId::UrbanDistrict: return "UrbanDistrict";
  }
  return "Unknown";
}

MapProfileId profile_from_string(std::string_view name) {
  if (name == "ModernCity") return MapProfileId::ModernCity;
  if (name == "PostSoviet") return MapProfileId::PostSoviet;
  if (name == "UrbanDistrict") return MapProfileId::UrbanDistrict;
  throw DataError("unknown map profile '" + std::string(name) + "'");
}

Scene::Scene(std::vector<BoxObstacle> obstacles, Vec3 marker_position, Rect bounds,
             MapProfileId profile)
    : obstacles_(std::move(obstacles)), marker_(marker_position), bounds_(bounds), profile_(profile) {
  if (!(bounds_.max_x > bounds_.min_x && bounds_.max_y > bounds_.min_y)) {
    throw ContractViolation("Scene: bounds must have positive extent");
  }
  for (const auto& b : obstacles_) {
    if (!is_finite(b.min_corner) || !is_finite(b.max_corner)) {
      throw ContractViolation("Scene: obstacle corners must be finite");
    }
    if (!(b.min_corner.x < b.max_corner.x && b.min_corner.y < b.max_corner.y &&
          b.min_corner.z < b.max_corner.z)) {
      throw ContractViolation("Scene: obstacle min_corner must be < max_corner componentwise");
    }
    if (b.min_corner.z != 0.0) throw ContractViolation("Scene: obstacles must be rooted at z = 0");
  }
  if (!is_finite(marker_)) throw ContractViolation("Scene: marker must be finite");
  if (!bounds_.contains_xy(marker_)) throw ContractViolation("Scene: marker outside bounds");

  bool supported = std::abs(marker_.z) <= kSurfaceTolerance;
  for (const auto& b : obstacles_) {
    const bool inside_xy = marker_.x > b.min_corner.x && marker_.x < b.max_corner.x &&
                           marker_.y > b.min_corner.y && marker_.y < b.max_corner.y;
    const bool inside_footprint = marker_.x >= b.min_corner.x && marker_.x <= b.max_corner.x &&
                                  marker_.y >= b.min_corner.y && marker_.y <= b.max_corner.y;
    if (inside_xy && marker_.z >= b.min_corner.z && marker_.z < b.max_corner.z - kSurfaceTolerance) {
      throw ContractViolation("Scene: marker inside an obstacle volume");
    }
    if (inside_footprint && std::abs(marker_.z - b.max_corner.z) <= kSurfaceTolerance) {
      supported = true;
    }
  }
  if (!supported) throw ContractViolation("Scene: marker must rest on the ground or a roof");
}

double ray_cast_subset(const std::vector<const BoxObstacle*>& boxes, const Vec3& origin,
                       const Vec3& direction, double max_range) {
  double best = std::min(max_range, ground_entry(origin, direction));
  for (const BoxObstacle* box : boxes) {
    best = std::min(best, slab_entry(*box, origin, direction));
  }
  return std::clamp(best, 0.0, max_range);
}

double ray_cast(const Scene& scene, const Vec3& origin, const Vec3& direction, double max_range) {
  check_ray_args(direction, max_range);
  double best = std::min(max_range, ground_entry(origin, direction));
  for (const auto& box : scene.obstacles()) {
    best = std::min(best, slab_entry(box, origin, direction));
  }
  return std::clamp(best, 0.0, max_range);
}

double point_box_distance(const Vec3& p, const BoxObstacle& box) {
  const double dx = std::max({box.min_corner.x - p.x, 0.0, p.x - box.max_corner.x});
  const double dy = std::max({box.min_corner.y - p.y, 0.0, p.y - box.max_corner.y});
  const double dz = std::max({box.min_corner.z - p.z, 0.0, p.z - box.max_corner.z});
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

double segment_box_distance(const Vec3& a, const Vec3& b, const BoxObstacle& box) {
  const Vec3 d = b - a;
  const std::array<double, 3> pa{a.x, a.y, a.z};
  const std::array<double, 3> pd{d.x, d.y, d.z};
  const std::array<double, 3> lo{box.min_corner.x, box.min_corner.y, box.min_corner.z};
  const std::array<double, 3> hi{box.max_corner.x, box.max_corner.y, box.max_corner.z};

  // Breakpoints where the segment crosses a slab plane; between two of them
  // each axis is either clamped or free, so the squared distance is quadratic.
  std::vector<double> ts{0.0, 1.0};
  for (int i = 0; i < 3; ++i) {
    if (pd[i] == 0.0) continue;
    for (double plane : {lo[i], hi[i]}) {
      const double t = (plane - pa[i]) / pd[i];
      if (t > 0.0 && t < 1.0) ts.push_back(t);
    }
  }
  std::sort(ts.begin(), ts.end());

  auto sq_dist_at = [&](double t) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double v = pa[i] + t * pd[i];
      const double e = v < lo[i] ? lo[i] - v : (v > hi[i] ? v - hi[i] : 0.0);
      s += e * e;
    }
    return s;
  };

  double best = sq_dist_at(0.0);
  for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
    const double t0 = ts[k];
    const double t1 = ts[k + 1];
    best = std::min(best, sq_dist_at(t1));
    if (t1 - t0 <= 0.0) continue;
    const double tm = 0.5 * (t0 + t1);
    // f(t) = sum over violated axes of (c_i + t*d_i)^2, where c_i is the offset to the bound.
    double qa = 0.0;
    double qb = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double vm = pa[i] + tm * pd[i];
      double bound;
      if (vm < lo[i]) {
        bound = lo[i];
      } else if (vm > hi[i]) {
        bound = hi[i];
      } else {
        continue;
      }
      const double c = pa[i] - bound;
      qa += pd[i] * pd[i];
      qb += 2.0 * c * pd[i];
    }
    if (qa > 0.0) {
      const double t_star = std::clamp(-qb / (2.0 * qa), t0, t1);
      best = std::min(best, sq_dist_at(t_star));
    } else {
      best = std::min(best, sq_dist_at(tm));
    }
  }
  return std::sqrt(best);
}

bool swept_collision(const Scene& scene, const Vec3& from, const Vec3& to, double drone_radius) {
  if (std::min(from.z, to.z) <= drone_radius) return true;
  for (const auto& box : scene.obstacles()) {
    // Cheap reject on the inflated bounding boxes.
    if (std::max(from.x, to.x) < box.min_corner.x - drone_radius ||
        std::min(from.x, to.x) > box.max_corner.x + drone_radius ||
        std::max(from.y, to.y) < box.min_corner.y - drone_radius ||
        std::min(from.y, to.y) > box.max_corner.y + drone_radius ||
        std::min(from.z, to.z) > box.max_corner.z + drone_radius) {
      continue;
    }
    if (segment_box_distance(from, to, box) <= drone_radius) return true;
  }
  return false;
}

bool point_in_disc(const Vec3& p, const Vec3& center, double radius) {
  return xy_distance(p, center) <= radius;
}

double surface_height(const Scene& scene, double x, double y) {
  double h = 0.0;
  for (const auto& b : scene.obstacles()) {
    if (x >= b.min_corner.x && x <= b.max_corner.x && y >= b.min_corner.y && y <= b.max_corner.y) {
      h = std::max(h, b.max_corner.z);
    }
  }
  return h;
}

}  // namespace markersim
