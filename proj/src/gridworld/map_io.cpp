#include "vmap/gridworld/map_io.hpp"

#include <fstream>
#include <sstream>

namespace vmap::gridworld {
namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(s);
  while (std::getline(in, part, sep)) parts.push_back(part);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

}  // namespace

std::string format_map_record(const WorldMap& map) {
  std::string terrain(kCellCount, 'G');
  for (std::size_t i = 0; i < kCellCount; ++i) {
    if (map.terrain()[i] == Terrain::Water) terrain[i] = 'W';
  }
  std::string objects;
  for (std::size_t i = 0; i < kCellCount; ++i) {
    const auto obj = map.objects()[i];
    if (!obj) continue;
    const Cell c = Cell::from_index(i);
    if (!objects.empty()) objects += ';';
    objects += std::string(kind_name(*obj)) + '@' + std::to_string(c.row) + ',' + std::to_string(c.col);
  }
  if (objects.empty()) objects = "-";
  return map.map_id() + '\t' + std::to_string(map.seed()) + '\t' + terrain + '\t' + objects;
}

WorldMap parse_map_record(const std::string& line) {
  const auto fields = split(line, '\t');
  if (fields.size() != 4) throw MapFormatError("map record must have 4 tab-separated fields: " + line);
  const std::string& map_id = fields[0];
  std::uint64_t seed = 0;
  try {
    std::size_t used = 0;
    seed = std::stoull(fields[1], &used);
    if (used != fields[1].size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw MapFormatError("map " + map_id + ": bad seed '" + fields[1] + "'");
  }
  if (fields[2].size() != kCellCount) throw MapFormatError("map " + map_id + ": terrain must be 100 characters");
  WorldMap::TerrainGrid terrain{};
  for (std::size_t i = 0; i < kCellCount; ++i) {
    switch (fields[2][i]) {
      case 'G': terrain[i] = Terrain::Grass; break;
      case 'W': terrain[i] = Terrain::Water; break;
      default: throw MapFormatError("map " + map_id + ": bad terrain character");
    }
  }
  WorldMap::ObjectGrid objects{};
  if (fields[3] != "-") {
    for (const std::string& item : split(fields[3], ';')) {
      const auto at = item.find('@');
      const auto comma = item.find(',', at == std::string::npos ? 0 : at);
      if (at == std::string::npos || comma == std::string::npos) {
        throw MapFormatError("map " + map_id + ": bad object entry '" + item + "'");
      }
      const auto kind = kind_from_name(item.substr(0, at));
      if (!kind) throw MapFormatError("map " + map_id + ": unknown object kind in '" + item + "'");
      Cell c;
      try {
        c = Cell{std::stoi(item.substr(at + 1, comma - at - 1)), std::stoi(item.substr(comma + 1))};
      } catch (const std::exception&) {
        throw MapFormatError("map " + map_id + ": bad coordinates in '" + item + "'");
      }
      if (!c.on_grid()) throw MapFormatError("map " + map_id + ": object off grid in '" + item + "'");
      if (objects[c.index()]) throw MapFormatError("map " + map_id + ": two objects in one cell");
      objects[c.index()] = *kind;
    }
  }
  try {
    return WorldMap(map_id, seed, terrain, objects);
  } catch (const InvalidMap& e) {
    throw MapFormatError(e.what());
  }
}

void write_maps(const std::filesystem::path& path, const std::vector<WorldMap>& maps) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MapFormatError("cannot write " + path.string());
  out << "#vmap-maps " << kMapFormatVersion << '\n';
  out << "# map_id\tseed\tterrain\tobjects\n";
  for (const WorldMap& m : maps) out << format_map_record(m) << '\n';
  if (!out) throw MapFormatError("failed writing " + path.string());
}

std::vector<WorldMap> read_maps(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MapFormatError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "#vmap-maps " + std::to_string(kMapFormatVersion)) {
    throw MapFormatError(path.string() + ": missing or unsupported map file header");
  }
  std::vector<WorldMap> maps;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    maps.push_back(parse_map_record(line));
  }
  return maps;
}

}  // namespace vmap::gridworld
