// Brute-force reference implementations shared by the unit and acceptance
// tests. They deliberately avoid the library's own geometry routines.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "markersim/geometry.hpp"
#include "markersim/rng.hpp"

namespace markersim::test {

inline Vec3 random_unit(Rng& rng) {
  for (;;) {
    const Vec3 v{uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)};
    const double n = std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
    if (n > 0.1 && n <= 1.0) return v * (1.0 / n);
  }
}

inline Scene random_box_scene(Rng& rng, int boxes) {
  std::vector<BoxObstacle> obs;
  for (int i = 0; i < boxes; ++i) {
    const double x = uniform(rng, -40, 35);
    const double y = uniform(rng, -40, 35);
    obs.push_back({{x, y, 0.0}, {x + uniform(rng, 1, 10), y + uniform(rng, 1, 10), uniform(rng, 3, 35)}});
  }
  // marker far outside the box area keeps the scene valid
  return Scene(std::move(obs), {48.0, 48.0, 0.0}, {-50, -50, 50, 50}, MapProfileId::ModernCity);
}

inline bool inside_any(const Scene& scene, const Vec3& p) {
  for (const auto& b : scene.obstacles()) {
    if (p.x >= b.min_corner.x && p.x <= b.max_corner.x && p.y >= b.min_corner.y &&
        p.y <= b.max_corner.y && p.z >= b.min_corner.z && p.z <= b.max_corner.z) {
      return true;
    }
  }
  return false;
}

/// Nearest hit by intersecting every face plane and testing the face rectangle.
inline double face_plane_ray(const Scene& scene, const Vec3& o, const Vec3& d, double max_range) {
  double best = max_range;
  if (d.z < 0.0) best = std::min(best, o.z / -d.z);
  const auto comp = [](const Vec3& v, int axis) { return axis == 0 ? v.x : axis == 1 ? v.y : v.z; };
  for (const auto& b : scene.obstacles()) {
    for (int axis = 0; axis < 3; ++axis) {
      const double dir = comp(d, axis);
      if (dir == 0.0) continue;
      for (const double plane : {comp(b.min_corner, axis), comp(b.max_corner, axis)}) {
        const double t = (plane - comp(o, axis)) / dir;
        if (t < 0.0 || t >= best) continue;
        const Vec3 p = o + d * t;
        bool inside = true;
        for (int other = 0; other < 3 && inside; ++other) {
          if (other == axis) continue;
          const double c = comp(p, other);
          inside = c >= comp(b.min_corner, other) - 1e-12 && c <= comp(b.max_corner, other) + 1e-12;
        }
        if (inside) best = t;
      }
    }
  }
  return best;
}

inline double box_gap(const Vec3& p, const BoxObstacle& b) {
  const double dx = std::max({b.min_corner.x - p.x, 0.0, p.x - b.max_corner.x});
  const double dy = std::max({b.min_corner.y - p.y, 0.0, p.y - b.max_corner.y});
  const double dz = std::max({b.min_corner.z - p.z, 0.0, p.z - b.max_corner.z});
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Minimum point-to-box distance along a segment: dense samples, then a
/// ternary search around the best sample (the distance is convex along a line).
inline double sampled_segment_box_distance(const Vec3& a, const Vec3& b, const BoxObstacle& box,
                                           int samples = 4000) {
  const auto f = [&](double t) { return box_gap(a + (b - a) * t, box); };
  int best_k = 0;
  double best = f(0.0);
  for (int k = 1; k <= samples; ++k) {
    const double v = f(static_cast<double>(k) / samples);
    if (v < best) {
      best = v;
      best_k = k;
    }
  }
  double lo = std::max(0, best_k - 1) / static_cast<double>(samples);
  double hi = std::min(samples, best_k + 1) / static_cast<double>(samples);
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (f(m1) < f(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  return std::min(best, f(0.5 * (lo + hi)));
}

inline bool sampled_sweep_hits(const Scene& scene, const Vec3& a, const Vec3& b, double radius) {
  if (std::min(a.z, b.z) <= radius) return true;
  for (const auto& box : scene.obstacles()) {
    if (sampled_segment_box_distance(a, b, box, 400) <= radius) return true;
  }
  return false;
}

}  // namespace markersim::test
