#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "markersim/errors.hpp"
#include "markersim/planners.hpp"
#include "planner_oracles.hpp"

using namespace markersim;
using namespace markersim::test;

namespace {

Scenario wall_scenario(double wall_height) {
  Scene scene({{{8.0, -35.0, 0.0}, {9.0, 35.0, wall_height}}}, {55, 55, 0}, {-60, -60, 60, 60},
              MapProfileId::ModernCity);
  return {"wall", std::move(scene), "", {{0, 0, 20}, 0, 0, 0}, 0.5, {}, 1, 30.0};
}

EpisodeRecord fly(const Scenario& sc, PlannerVariant variant, const CoveragePlan& plan) {
  DetectionModelParams quiet;
  quiet.base_tp = 0.0;
  quiet.fp_base = 0.0;
  auto c = planner_controller(plan, variant, {});
  Rng rng(1);
  return run_episode(sc, *c, quiet, {5000, 0.5}, rng);
}

}  // namespace

TEST(Spiral, ZeroRadiusIsCenterOnly) {
  const auto plan = plan_spiral({1, 2, 20}, 0.0, {});
  ASSERT_EQ(plan.waypoints.size(), 1u);
  EXPECT_EQ(plan.waypoints[0], (Vec3{1, 2, 20}));
}

TEST(Spiral, ArcLengthMatchesIntegration) {
  const auto plan = plan_spiral({0, 0, 20}, 30.0, {});
  const double oracle = spiral_arc_length_oracle(5.0, 30.0);
  EXPECT_NEAR(oracle, M_PI * 900.0 / 5.0, 0.01 * oracle);
  EXPECT_NEAR(plan.sweep_length, oracle, 0.02 * oracle);
  EXPECT_NEAR(polyline_xy(plan.waypoints), oracle, 0.02 * oracle);
  EXPECT_NEAR(static_cast<double>(plan.waypoints.size()), 114.0, 3.0);
}

TEST(Spiral, ContainmentAndAltitude) {
  const Vec3 c{3, -4, 17};
  const auto plan = plan_spiral(c, 30.0, {});
  EXPECT_EQ(plan.waypoints.front(), c);
  for (const auto& w : plan.waypoints) {
    EXPECT_TRUE(point_in_disc(w, c, 30.0));
    EXPECT_DOUBLE_EQ(w.z, 17.0);
  }
  for (std::size_t i = 1; i < plan.waypoints.size(); ++i) {
    EXPECT_LE(xy_distance(plan.waypoints[i - 1], plan.waypoints[i]), 5.0 + 1e-9);
  }
}

TEST(Zigzag, LaneLengthMatchesChordSum) {
  const auto plan = plan_zigzag({0, 0, 20}, 30.0, {});
  const double oracle = chord_sum_oracle(5.0, 30.0);
  EXPECT_NEAR(oracle, 569.658, 1e-3);
  EXPECT_NEAR(plan.sweep_length, oracle, 0.02 * oracle);
}

TEST(Zigzag, TwelveLanesAtConfiguredOffsets) {
  const auto plan = plan_zigzag({0, 0, 20}, 30.0, {});
  std::set<double> ys;
  for (const auto& w : plan.waypoints) ys.insert(std::round(w.y * 1e6) / 1e6);
  std::set<double> expected;
  for (int k = 0; k < 12; ++k) expected.insert(-30.0 + 2.5 + 5.0 * k);
  for (const double y : expected) EXPECT_TRUE(ys.count(y)) << "missing lane " << y;
}

TEST(Zigzag, TransitsFromCenterToOuterLaneEnd) {
  const Vec3 c{0, 0, 20};
  const auto plan = plan_zigzag(c, 30.0, {});
  ASSERT_GE(plan.waypoints.size(), 2u);
  EXPECT_EQ(plan.waypoints.front(), c);
  // transit from the center straight to the end of an outer lane
  const auto lane_start = std::find_if(plan.waypoints.begin(), plan.waypoints.end(),
                                       [](const Vec3& w) { return std::abs(std::abs(w.y) - 27.5) < 1e-9; });
  ASSERT_NE(lane_start, plan.waypoints.end());
  EXPECT_NEAR(std::hypot(lane_start->x, lane_start->y), 30.0, 1e-6);
  for (auto it = plan.waypoints.begin() + 1; it != lane_start; ++it) {
    EXPECT_NEAR(it->x * lane_start->y - it->y * lane_start->x, 0.0, 1e-9);
  }
}

TEST(Zigzag, SmallDiscGivesOneChord) {
  const auto plan = plan_zigzag({0, 0, 20}, 2.0, {});
  for (const auto& w : plan.waypoints) {
    EXPECT_TRUE(point_in_disc(w, {0, 0, 20}, 2.0));
    EXPECT_DOUBLE_EQ(w.y, plan.waypoints.front().y);
  }
}

TEST(Planners, ContainmentOverManyCenters) {
  for (const double r : {0.5, 3.0, 12.7, 30.0}) {
    for (const Vec3 c : {Vec3{0, 0, 20}, Vec3{-7.3, 11.1, 14}}) {
      for (const auto& plan : {plan_spiral(c, r, {}), plan_zigzag(c, r, {})}) {
        for (const auto& w : plan.waypoints) ASSERT_TRUE(point_in_disc(w, c, r)) << to_string(plan.pattern);
      }
    }
  }
}

TEST(Planners, FootprintUnionCoversDisc) {
  const Vec3 c{0, 0, 20};
  const double fp = 20.0 * std::tan(15.0 * M_PI / 180.0);
  EXPECT_GE(footprint_coverage(plan_spiral(c, 30.0, {}).waypoints, c, 30.0, fp), 0.95);
  EXPECT_GE(footprint_coverage(plan_zigzag(c, 30.0, {}).waypoints, c, 30.0, fp), 0.95);
}

TEST(Planners, PlansArePure) {
  const auto a = plan_spiral({1, 1, 20}, 30.0, {});
  const auto b = plan_spiral({1, 1, 20}, 30.0, {});
  EXPECT_EQ(a.waypoints, b.waypoints);
  EXPECT_EQ(plan_zigzag({1, 1, 20}, 30.0, {}).waypoints, plan_zigzag({1, 1, 20}, 30.0, {}).waypoints);
}

TEST(Planners, ConfigValidation) {
  PlannerConfig c;
  c.lane_spacing = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(PlannerController, EmptySceneClimbEqualsFlat) {
  Scenario sc = wall_scenario(1.0);
  sc.scene = Scene({}, {55, 55, 0}, {-60, -60, 60, 60}, MapProfileId::ModernCity);
  for (const auto& plan : {plan_spiral({0, 0, 20}, 30, {}), plan_zigzag({0, 0, 20}, 30, {})}) {
    const auto flat = fly(sc, PlannerVariant::Flat2D, plan);
    const auto climb = fly(sc, PlannerVariant::Climb3D, plan);
    EXPECT_EQ(flat.trajectory, climb.trajectory);
    EXPECT_EQ(flat.termination, Termination::PlanExhausted);
    EXPECT_EQ(climb.termination, Termination::PlanExhausted);
  }
}

TEST(PlannerController, WallJustAboveCruiseForcesOneClimb) {
  const Scenario sc = wall_scenario(23.0);
  const auto plan = plan_spiral({0, 0, 20}, 30, {});
  const auto flat = fly(sc, PlannerVariant::Flat2D, plan);
  EXPECT_EQ(flat.termination, Termination::Collision);

  const auto climb = fly(sc, PlannerVariant::Climb3D, plan);
  EXPECT_EQ(climb.termination, Termination::PlanExhausted);
  double top = 0.0;
  bool crossed = false;
  bool back_down = false;
  for (std::size_t k = 1; k < climb.trajectory.size(); ++k) {
    const Vec3& p = climb.trajectory[k];
    top = std::max(top, p.z);
    EXPECT_FALSE(swept_collision(sc.scene, climb.trajectory[k - 1], p, 0.5));
    crossed = crossed || p.x > 9.5;
    back_down = back_down || (crossed && p.z == 20.0);
  }
  EXPECT_DOUBLE_EQ(top, 25.0);
  EXPECT_TRUE(crossed);
  EXPECT_TRUE(back_down);
  int climbs = 0;
  for (const auto& a : climb.actions) climbs += std::holds_alternative<Climb>(a) ? 1 : 0;
  EXPECT_GE(climbs, 1);
}

TEST(PlannerController, UnclimbableWallEndsPlanExhausted) {
  const Scenario sc = wall_scenario(50.0);
  for (const auto& plan : {plan_spiral({0, 0, 20}, 30, {}), plan_zigzag({0, 0, 20}, 30, {})}) {
    const auto climb = fly(sc, PlannerVariant::Climb3D, plan);
    EXPECT_EQ(climb.termination, Termination::PlanExhausted);
    for (const auto& p : climb.trajectory) EXPECT_LE(p.z, 40.0);
  }
}

TEST(PlannerController, ClimbNeverCollidesOnGeneratedMaps) {
  for (const auto id : {MapProfileId::ModernCity, MapProfileId::PostSoviet, MapProfileId::UrbanDistrict}) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      const Scene scene = generate_scene(MapProfile::defaults_for(id), seed);
      const Pose6DoF start = sample_drone_start(scene, 30.0, seed);
      const Scenario sc{"gen", scene, "", start, 0.5, {}, seed, 30.0};
      for (const auto& plan : {plan_spiral(start.position, 30, {}), plan_zigzag(start.position, 30, {})}) {
        EXPECT_NE(fly(sc, PlannerVariant::Climb3D, plan).termination, Termination::Collision)
            << to_string(id) << " seed " << seed << " " << to_string(plan.pattern);
      }
    }
  }
}
