// Episode record interchange format: one JSON document per episode with
// "schema": "markersim.episode/1".
//
//   scenario_id, method          strings
//   termination                  Detected | PlanExhausted | Collision | Boundary
//                                | StepBudget | NonProgressive
//   trajectory                   [[x, y, z], ...]; entry k is the position at step k
//   actions                      [["F", step] | ["L"] | ["R"] | ["C", step]
//                                 | ["D", step] | ["W", x, y, z], ...]
//   detection                    null | {"step", "position": [x, y, z],
//                                        "truth": TruePositive | FalsePositive}
//   final_position               [x, y, z]
//   path_xy_length               meters
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "markersim/agent.hpp"

namespace markersim {

inline constexpr const char* kEpisodeSchema = "markersim.episode/1";

std::string serialize_record(const EpisodeRecord& record);
/// Throws DataError naming the offending field.
EpisodeRecord parse_record(const std::string& text);

void write_record_file(const std::filesystem::path& path, const EpisodeRecord& record);
EpisodeRecord read_record_file(const std::filesystem::path& path);

/// Waypoint sidecar for plotting: {"schema": "markersim.plan/1", "pattern", "waypoints"}.
std::string serialize_plan_sidecar(const std::string& pattern, const std::vector<Vec3>& waypoints);

}  // namespace markersim
