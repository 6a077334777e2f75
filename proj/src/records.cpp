#include "markersim/records.hpp"

#include "json.hpp"
#include "markersim/errors.hpp"
#include "markersim/scene_io.hpp"

namespace markersim {

using nlohmann::json;

namespace {

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec_from(const json& j, const char* field) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() || !j[2].is_number()) {
    throw DataError(std::string("field '") + field + "': expected [x, y, z]");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json action_json(const Action& a) {
  if (const auto* f = std::get_if<Forward>(&a)) return json::array({"F", f->step});
  if (std::holds_alternative<TurnLeft90>(a)) return json::array({"L"});
  if (std::holds_alternative<TurnRight90>(a)) return json::array({"R"});
  if (const auto* c = std::get_if<Climb>(&a)) return json::array({"C", c->step});
  if (const auto* d = std::get_if<Descend>(&a)) return json::array({"D", d->step});
  const auto& w = std::get<MoveToWaypoint>(a);
  return json::array({"W", w.target.x, w.target.y, w.target.z});
}

Action action_from(const json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_string()) throw DataError("field 'actions': bad entry");
  const auto tag = j[0].get<std::string>();
  auto num = [&](std::size_t i) {
    if (j.size() <= i || !j[i].is_number()) throw DataError("field 'actions': missing number");
    return j[i].get<double>();
  };
  if (tag == "F") return Forward{num(1)};
  if (tag == "L") return TurnLeft90{};
  if (tag == "R") return TurnRight90{};
  if (tag == "C") return Climb{num(1)};
  if (tag == "D") return Descend{num(1)};
  if (tag == "W") return MoveToWaypoint{{num(1), num(2), num(3)}};
  throw DataError("field 'actions': unknown tag '" + tag + "'");
}

const json& field(const json& j, const char* name) {
  if (!j.contains(name)) throw DataError(std::string("missing field '") + name + "'");
  return j.at(name);
}

}  // namespace

std::string serialize_record(const EpisodeRecord& r) {
  json j;
  j["schema"] = kEpisodeSchema;
  j["scenario_id"] = r.scenario_id;
  j["method"] = r.method;
  j["termination"] = std::string(to_string(r.termination));
  json traj = json::array();
  for (const auto& p : r.trajectory) traj.push_back(vec_json(p));
  j["trajectory"] = std::move(traj);
  json acts = json::array();
  for (const auto& a : r.actions) acts.push_back(action_json(a));
  j["actions"] = std::move(acts);
  if (r.detection) {
    j["detection"] = {{"step", r.detection->step_index},
                      {"position", vec_json(r.detection->reported_position)},
                      {"truth", std::string(to_string(r.detection->truth))}};
  } else {
    j["detection"] = nullptr;
  }
  j["final_position"] = vec_json(r.final_position);
  j["path_xy_length"] = r.path_xy_length;
  return j.dump() + "\n";
}

EpisodeRecord parse_record(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid JSON: ") + e.what());
  }
  try {
    if (!j.is_object()) throw DataError("record must be a JSON object");
    if (field(j, "schema") != kEpisodeSchema) throw DataError("field 'schema': unsupported version");
    EpisodeRecord r;
    r.scenario_id = field(j, "scenario_id").get<std::string>();
    r.method = field(j, "method").get<std::string>();
    r.termination = termination_from_string(field(j, "termination").get<std::string>());
    const auto& traj = field(j, "trajectory");
    if (!traj.is_array() || traj.empty()) throw DataError("field 'trajectory': must be a nonempty array");
    for (const auto& p : traj) r.trajectory.push_back(vec_from(p, "trajectory"));
    const auto& acts = field(j, "actions");
    if (!acts.is_array()) throw DataError("field 'actions': must be an array");
    for (const auto& a : acts) r.actions.push_back(action_from(a));
    const auto& det = field(j, "detection");
    if (!det.is_null()) {
      if (!det.contains("position")) throw DataError("field 'detection.position': missing");
      DetectionEvent ev;
      ev.step_index = field(det, "step").get<int>();
      ev.reported_position = vec_from(det.at("position"), "detection.position");
      const auto truth = field(det, "truth").get<std::string>();
      if (truth == "TruePositive") {
        ev.truth = DetectionTruth::TruePositive;
      } else if (truth == "FalsePositive") {
        ev.truth = DetectionTruth::FalsePositive;
      } else {
        throw DataError("field 'detection.truth': unknown value '" + truth + "'");
      }
      r.detection = ev;
    }
    if (r.detection.has_value() != (r.termination == Termination::Detected)) {
      throw DataError("field 'detection': must be present iff termination is Detected");
    }
    r.final_position = vec_from(field(j, "final_position"), "final_position");
    r.path_xy_length = field(j, "path_xy_length").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("type error: ") + e.what());
  }
}

void write_record_file(const std::filesystem::path& path, const EpisodeRecord& record) {
  write_file_atomic(path, serialize_record(record));
}

EpisodeRecord read_record_file(const std::filesystem::path& path) {
  try {
    return parse_record(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string serialize_plan_sidecar(const std::string& pattern, const std::vector<Vec3>& waypoints) {
  json j;
  j["schema"] = "markersim.plan/1";
  j["pattern"] = pattern;
  json wps = json::array();
  for (const auto& w : waypoints) wps.push_back(vec_json(w));
  j["waypoints"] = std::move(wps);
  return j.dump() + "\n";
}

}  // namespace markersim
