#include "vmap/gridworld/world_map.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace vmap::gridworld {
namespace {

constexpr std::array<std::string_view, kObjectKindCount> kKindNames = {
    "triangle", "star", "diamond", "circle", "heart", "spade", "rock", "tree", "horse", "house"};

constexpr std::array<Cell, 4> kNeighbourOffsets = {Cell{-1, 0}, Cell{1, 0}, Cell{0, 1}, Cell{0, -1}};

}  // namespace

std::string_view kind_name(ObjectKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

std::optional<ObjectKind> kind_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<ObjectKind>(i);
  }
  return std::nullopt;
}

std::vector<bool> flood_fill_grass(const WorldMap::TerrainGrid& terrain, Cell start) {
  std::vector<bool> seen(kCellCount, false);
  if (!start.on_grid() || terrain[start.index()] != Terrain::Grass) return seen;
  std::deque<Cell> frontier{start};
  seen[start.index()] = true;
  while (!frontier.empty()) {
    const Cell c = frontier.front();
    frontier.pop_front();
    for (Cell d : kNeighbourOffsets) {
      const Cell n{c.row + d.row, c.col + d.col};
      if (!n.on_grid() || seen[n.index()] || terrain[n.index()] != Terrain::Grass) continue;
      seen[n.index()] = true;
      frontier.push_back(n);
    }
  }
  return seen;
}

bool grass_is_connected(const WorldMap::TerrainGrid& terrain) {
  const auto first = std::find(terrain.begin(), terrain.end(), Terrain::Grass);
  if (first == terrain.end()) return false;
  const auto seen = flood_fill_grass(terrain, Cell::from_index(static_cast<std::size_t>(first - terrain.begin())));
  for (std::size_t i = 0; i < terrain.size(); ++i) {
    if (terrain[i] == Terrain::Grass && !seen[i]) return false;
  }
  return true;
}

WorldMap::WorldMap(std::string map_id, std::uint64_t seed, TerrainGrid terrain, ObjectGrid objects)
    : map_id_(std::move(map_id)), seed_(seed), terrain_(terrain), objects_(objects) {
  if (!grass_is_connected(terrain_)) throw InvalidMap("map " + map_id_ + ": grass is not one connected component");
  std::array<int, kObjectKindCount> counts{};
  for (std::size_t i = 0; i < kCellCount; ++i) {
    if (!objects_[i]) continue;
    if (terrain_[i] != Terrain::Grass) throw InvalidMap("map " + map_id_ + ": object placed on water");
    counts[static_cast<std::size_t>(*objects_[i])] += 1;
  }
  for (ObjectKind k : kUniqueKinds) {
    if (counts[static_cast<std::size_t>(k)] != 1) {
      throw InvalidMap("map " + map_id_ + ": unique object '" + std::string(kind_name(k)) + "' appears " +
                       std::to_string(counts[static_cast<std::size_t>(k)]) + " times");
    }
  }
}

std::vector<Cell> WorldMap::cells_of(ObjectKind kind) const {
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < kCellCount; ++i) {
    if (objects_[i] == kind) cells.push_back(Cell::from_index(i));
  }
  return cells;
}

std::vector<Cell> WorldMap::grass_cells() const {
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < kCellCount; ++i) {
    if (terrain_[i] == Terrain::Grass) cells.push_back(Cell::from_index(i));
  }
  return cells;
}

std::size_t WorldMap::count_of(ObjectKind kind) const {
  return static_cast<std::size_t>(std::count(objects_.begin(), objects_.end(), kind));
}

namespace {

void validate(const GenerationConfig& c) {
  if (!(c.water_fraction_min >= 0.0 && c.water_fraction_min <= c.water_fraction_max && c.water_fraction_max < 1.0)) {
    throw InfeasibleConfig("water fraction range must satisfy 0 <= min <= max < 1");
  }
  if (c.nonunique_count_min < 0 || c.nonunique_count_min > c.nonunique_count_max) {
    throw InfeasibleConfig("non-unique count range must satisfy 0 <= min <= max");
  }
  if (c.max_attempts < 1) throw InfeasibleConfig("max_attempts must be positive");
  const int min_grass = kCellCount - static_cast<int>(std::lround(c.water_fraction_max * kCellCount));
  const int max_objects = static_cast<int>(kUniqueKinds.size()) + 4 * c.nonunique_count_max;
  if (min_grass < 16 || min_grass < max_objects) {
    throw InfeasibleConfig("configuration allows only " + std::to_string(min_grass) + " grass cells for up to " +
                           std::to_string(max_objects) + " objects (need at least 16 and room for every object)");
  }
}

WorldMap::TerrainGrid grow_puddles(int water_cells, Rng& rng) {
  WorldMap::TerrainGrid terrain;
  terrain.fill(Terrain::Grass);
  std::vector<std::size_t> water;
  while (static_cast<int>(water.size()) < water_cells) {
    std::size_t next;
    if (water.empty() || rng.bernoulli(0.2)) {
      next = rng.index(kCellCount);
    } else {
      const Cell from = Cell::from_index(water[rng.index(water.size())]);
      const Cell d = kNeighbourOffsets[rng.index(4)];
      const Cell n{from.row + d.row, from.col + d.col};
      if (!n.on_grid()) continue;
      next = n.index();
    }
    if (terrain[next] == Terrain::Water) continue;
    terrain[next] = Terrain::Water;
    water.push_back(next);
  }
  return terrain;
}

}  // namespace

WorldMap generate_map(std::uint64_t seed, const GenerationConfig& config, std::string map_id) {
  validate(config);
  if (map_id.empty()) map_id = "map-" + std::to_string(seed);
  Rng rng(seed);
  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    const double fraction = rng.uniform(config.water_fraction_min, config.water_fraction_max);
    const int water_cells = static_cast<int>(std::lround(fraction * kCellCount));
    WorldMap::TerrainGrid terrain = grow_puddles(water_cells, rng);
    if (!grass_is_connected(terrain)) continue;

    std::vector<ObjectKind> placements(kUniqueKinds.begin(), kUniqueKinds.end());
    for (ObjectKind k : kNonUniqueKinds) {
      const auto n = rng.uniform_int(config.nonunique_count_min, config.nonunique_count_max);
      placements.insert(placements.end(), static_cast<std::size_t>(n), k);
    }
    std::vector<std::size_t> grass;
    for (std::size_t i = 0; i < kCellCount; ++i) {
      if (terrain[i] == Terrain::Grass) grass.push_back(i);
    }
    if (grass.size() < placements.size()) continue;
    rng.shuffle(grass);
    WorldMap::ObjectGrid objects{};
    for (std::size_t i = 0; i < placements.size(); ++i) objects[grass[i]] = placements[i];
    return WorldMap(std::move(map_id), seed, terrain, objects);
  }
  throw InfeasibleConfig("map generation failed after " + std::to_string(config.max_attempts) +
                         " attempts; the configuration is infeasible");
}

Cell sample_grass_cell(const WorldMap::TerrainGrid& terrain, Rng& rng) {
  std::vector<Cell> grass;
  for (std::size_t i = 0; i < kCellCount; ++i) {
    if (terrain[i] == Terrain::Grass) grass.push_back(Cell::from_index(i));
  }
  if (grass.empty()) throw InvalidMap("no grass cell to sample");
  return rng.pick(grass);
}

Cell sample_goal(const WorldMap& map, Rng& rng) { return sample_grass_cell(map.terrain(), rng); }

}  // namespace vmap::gridworld
