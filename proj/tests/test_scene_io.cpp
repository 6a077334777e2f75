#include <gtest/gtest.h>

#include <filesystem>
#include <limits>

#include "markersim/errors.hpp"
#include "markersim/records.hpp"
#include "markersim/scenario.hpp"
#include "markersim/scene_io.hpp"

using namespace markersim;
namespace fs = std::filesystem;

TEST(SceneIo, FormatDoubleRoundTrips) {
  for (const double v : {0.1, 1.0 / 3.0, -17.079894531528268, 1e-300, 123456789.125}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(2.5), "2.5");
}

TEST(SceneIo, GeneratedSceneSerializationIsByteStable) {
  const Scene scene = generate_scene(MapProfile::post_soviet(), 99);
  const std::string text = serialize_scene(scene);
  const Scene back = parse_scene(text);
  EXPECT_EQ(back, scene);
  EXPECT_EQ(serialize_scene(back), text);
}

TEST(SceneIo, ParseRejectsMalformedInput) {
  EXPECT_THROW(parse_scene(""), DataError);
  EXPECT_THROW(parse_scene("markersim-scene 2\n"), DataError);
  EXPECT_THROW(parse_scene("markersim-scene 1\nprofile ModernCity\nbounds 0 0 10 10\n"), DataError);
  EXPECT_THROW(parse_scene("markersim-scene 1\nprofile ModernCity\nbounds 0 0 10 x\nmarker 1 1 0\n"),
               DataError);
  EXPECT_THROW(parse_scene("markersim-scene 1\nprofile ModernCity\nbounds 0 0 10 10\nmarker 1 1 0\n"
                           "tree 1 2 3\n"),
               DataError);
}

TEST(SceneIo, ParseWrapsInvalidGeometry) {
  // marker outside bounds is a contract breach of Scene, surfaced as bad data
  EXPECT_THROW(parse_scene("markersim-scene 1\nprofile ModernCity\nbounds 0 0 10 10\nmarker 20 1 0\n"),
               DataError);
}

TEST(SceneIo, AtomicWriteReplacesFile) {
  const fs::path dir = fs::temp_directory_path() / "markersim_scene_io";
  fs::create_directories(dir);
  const fs::path p = dir / "x.txt";
  write_file_atomic(p, "one");
  write_file_atomic(p, "two");
  EXPECT_EQ(read_file(p), "two");
  fs::remove_all(dir);
}

TEST(Records, RoundTripPreservesEveryField) {
  EpisodeRecord r;
  r.scenario_id = "ModernCity_m00_s0_v0";
  r.method = "Zigzag3D";
  r.trajectory = {{0, 0, 20}, {5, 0, 20}, {5, 0, 25}};
  r.actions = {MoveToWaypoint{{5, 0, 20}}, Climb{5.0}, Forward{2.0}, TurnLeft90{}, TurnRight90{},
               Descend{5.0}};
  r.detection = DetectionEvent{2, {5.1, 0.2, 0.0}, DetectionTruth::FalsePositive};
  r.termination = Termination::Detected;
  r.final_position = {5, 0, 25};
  r.path_xy_length = 5.0;
  const EpisodeRecord back = parse_record(serialize_record(r));
  EXPECT_EQ(back.scenario_id, r.scenario_id);
  EXPECT_EQ(back.method, r.method);
  EXPECT_EQ(back.trajectory, r.trajectory);
  EXPECT_EQ(back.actions, r.actions);
  EXPECT_EQ(back.detection, r.detection);
  EXPECT_EQ(back.termination, r.termination);
  EXPECT_EQ(back.final_position, r.final_position);
  EXPECT_EQ(back.path_xy_length, r.path_xy_length);
  EXPECT_EQ(serialize_record(back), serialize_record(r));
}

TEST(Records, ParseNamesMissingField) {
  try {
    parse_record(R"({"schema":"markersim.episode/1","method":"E2ERL"})");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("scenario_id"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_record("not json"), DataError);
}
