#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "vmap/gridworld/world_map.hpp"

namespace vmap::gridworld {

// Map file, version 1. Lines starting with '#' are comments; the first line
// is the header "#vmap-maps 1". One map per record, tab-separated:
//
//   map_id    seed    terrain    objects
//
// terrain is 100 characters row-major, 'G' grass and 'W' water. objects is a
// ';'-separated list of kind@row,col in row-major order ("-" when empty).
inline constexpr int kMapFormatVersion = 1;

class MapFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string format_map_record(const WorldMap& map);
WorldMap parse_map_record(const std::string& line);

void write_maps(const std::filesystem::path& path, const std::vector<WorldMap>& maps);
std::vector<WorldMap> read_maps(const std::filesystem::path& path);

}  // namespace vmap::gridworld
