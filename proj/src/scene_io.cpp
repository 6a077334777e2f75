#include "markersim/scene_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "markersim/errors.hpp"

namespace markersim {

namespace {

double parse_double(const std::string& tok, int line_no) {
  double v = 0.0;
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw DataError("scene line " + std::to_string(line_no) + ": bad number '" + tok + "'");
  }
  return v;
}

std::vector<double> parse_numbers(std::istringstream& in, std::size_t count, int line_no) {
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_double(tok, line_no));
  if (out.size() != count) {
    throw DataError("scene line " + std::to_string(line_no) + ": expected " +
                    std::to_string(count) + " numbers");
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw DataError("format_double failed");
  return std::string(buf, ptr);
}

std::string serialize_scene(const Scene& scene) {
  std::ostringstream out;
  const auto& b = scene.bounds();
  const auto& m = scene.marker_position();
  out << "markersim-scene 1\n";
  out << "profile " << to_string(scene.profile()) << "\n";
  out << "bounds " << format_double(b.min_x) << ' ' << format_double(b.min_y) << ' '
      << format_double(b.max_x) << ' ' << format_double(b.max_y) << "\n";
  out << "marker " << format_double(m.x) << ' ' << format_double(m.y) << ' ' << format_double(m.z)
      << "\n";
  for (const auto& box : scene.obstacles()) {
    out << "box " << format_double(box.min_corner.x) << ' ' << format_double(box.min_corner.y)
        << ' ' << format_double(box.min_corner.z) << ' ' << format_double(box.max_corner.x) << ' '
        << format_double(box.max_corner.y) << ' ' << format_double(box.max_corner.z) << "\n";
  }
  return out.str();
}

Scene parse_scene(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool saw_header = false;
  bool saw_profile = false;
  bool saw_bounds = false;
  bool saw_marker = false;
  MapProfileId profile = MapProfileId::ModernCity;
  Rect bounds;
  Vec3 marker;
  std::vector<BoxObstacle> boxes;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string tag;
    fields >> tag;
    if (tag == "markersim-scene") {
      std::string version;
      fields >> version;
      if (version != "1") throw DataError("unsupported scene version '" + version + "'");
      saw_header = true;
    } else if (tag == "profile") {
      std::string name;
      fields >> name;
      profile = profile_from_string(name);
      saw_profile = true;
    } else if (tag == "bounds") {
      auto v = parse_numbers(fields, 4, line_no);
      bounds = {v[0], v[1], v[2], v[3]};
      saw_bounds = true;
    } else if (tag == "marker") {
      auto v = parse_numbers(fields, 3, line_no);
      marker = {v[0], v[1], v[2]};
      saw_marker = true;
    } else if (tag == "box") {
      auto v = parse_numbers(fields, 6, line_no);
      boxes.push_back({{v[0], v[1], v[2]}, {v[3], v[4], v[5]}});
    } else {
      throw DataError("scene line " + std::to_string(line_no) + ": unknown record '" + tag + "'");
    }
  }
  if (!saw_header) throw DataError("scene: missing 'markersim-scene' header");
  if (!saw_profile || !saw_bounds || !saw_marker) {
    throw DataError("scene: missing profile, bounds or marker record");
  }
  try {
    return Scene(std::move(boxes), marker, bounds, profile);
  } catch (const ContractViolation& e) {
    throw DataError(std::string("scene: ") + e.what());
  }
}

void write_scene_file(const std::filesystem::path& path, const Scene& scene) {
  write_file_atomic(path, serialize_scene(scene));
}

Scene read_scene_file(const std::filesystem::path& path) { return parse_scene(read_file(path)); }

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace markersim
