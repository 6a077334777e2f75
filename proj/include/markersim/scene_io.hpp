// Scene text format, version 1. One record per line, whitespace separated:
//
//   markersim-scene 1
//   profile <ModernCity|PostSoviet|UrbanDistrict>
//   bounds <min_x> <min_y> <max_x> <max_y>
//   marker <x> <y> <z>
//   box <min_x> <min_y> <min_z> <max_x> <max_y> <max_z>     (zero or more)
//
// Numbers are written in shortest round-trip form, so write → read → write is
// byte-stable.
#pragma once

#include <filesystem>
#include <string>

#include "markersim/geometry.hpp"

namespace markersim {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

std::string serialize_scene(const Scene& scene);
Scene parse_scene(const std::string& text);

void write_scene_file(const std::filesystem::path& path, const Scene& scene);
Scene read_scene_file(const std::filesystem::path& path);

/// Writes `contents` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace markersim
