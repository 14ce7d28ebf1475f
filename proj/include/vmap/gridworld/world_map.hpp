#pragma once

#include <array>
#include <compare>
#include <cstdlib>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vmap/core/rng.hpp"

namespace vmap::gridworld {

inline constexpr int kGridSize = 10;
inline constexpr int kCellCount = kGridSize * kGridSize;

// (row, col); row 0 is the northern edge, col 0 the western edge.
struct Cell {
  int row = 0;
  int col = 0;

  friend constexpr auto operator<=>(const Cell&, const Cell&) = default;

  constexpr bool on_grid() const { return row >= 0 && row < kGridSize && col >= 0 && col < kGridSize; }
  constexpr std::size_t index() const { return static_cast<std::size_t>(row * kGridSize + col); }
  static constexpr Cell from_index(std::size_t i) {
    return {static_cast<int>(i) / kGridSize, static_cast<int>(i) % kGridSize};
  }
};

inline int manhattan(Cell a, Cell b) { return std::abs(a.row - b.row) + std::abs(a.col - b.col); }

// One real number per cell, row-major.
using Grid = std::array<double, kCellCount>;

enum class Terrain : std::uint8_t { Grass, Water };

enum class ObjectKind : std::uint8_t { Triangle, Star, Diamond, Circle, Heart, Spade, Rock, Tree, Horse, House };

inline constexpr std::size_t kObjectKindCount = 10;
inline constexpr std::array<ObjectKind, 6> kUniqueKinds = {ObjectKind::Triangle, ObjectKind::Star,  ObjectKind::Diamond,
                                                          ObjectKind::Circle,   ObjectKind::Heart, ObjectKind::Spade};
inline constexpr std::array<ObjectKind, 4> kNonUniqueKinds = {ObjectKind::Rock, ObjectKind::Tree, ObjectKind::Horse,
                                                             ObjectKind::House};

constexpr bool is_unique_kind(ObjectKind k) { return static_cast<int>(k) < 6; }
std::string_view kind_name(ObjectKind k);
std::optional<ObjectKind> kind_from_name(std::string_view name);

class InvalidMap : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class WorldMap {
 public:
  using TerrainGrid = std::array<Terrain, kCellCount>;
  using ObjectGrid = std::array<std::optional<ObjectKind>, kCellCount>;

  // Throws InvalidMap unless every invariant holds: one 4-connected grass
  // component, objects on grass only, each unique kind exactly once.
  WorldMap(std::string map_id, std::uint64_t seed, TerrainGrid terrain, ObjectGrid objects);

  const std::string& map_id() const { return map_id_; }
  std::uint64_t seed() const { return seed_; }
  const TerrainGrid& terrain() const { return terrain_; }
  const ObjectGrid& objects() const { return objects_; }

  Terrain terrain_at(Cell c) const { return terrain_[c.index()]; }
  bool is_grass(Cell c) const { return terrain_at(c) == Terrain::Grass; }
  std::optional<ObjectKind> object_at(Cell c) const { return objects_[c.index()]; }

  // Row-major order.
  std::vector<Cell> cells_of(ObjectKind kind) const;
  std::vector<Cell> grass_cells() const;
  std::size_t count_of(ObjectKind kind) const;

  friend bool operator==(const WorldMap&, const WorldMap&) = default;

 private:
  std::string map_id_;
  std::uint64_t seed_;
  TerrainGrid terrain_;
  ObjectGrid objects_;
};

// Cells reachable from `start` over grass with 4-connected moves.
std::vector<bool> flood_fill_grass(const WorldMap::TerrainGrid& terrain, Cell start);
bool grass_is_connected(const WorldMap::TerrainGrid& terrain);

struct GenerationConfig {
  double water_fraction_min = 0.10;
  double water_fraction_max = 0.35;
  int nonunique_count_min = 1;
  int nonunique_count_max = 3;
  int max_attempts = 10000;
};

class InfeasibleConfig : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Deterministic in (seed, config). Water is grown as puddles and layouts are
// rejected until the grass forms a single component.
WorldMap generate_map(std::uint64_t seed, const GenerationConfig& config = {}, std::string map_id = {});

// Uniform over grass cells.
Cell sample_goal(const WorldMap& map, Rng& rng);
Cell sample_grass_cell(const WorldMap::TerrainGrid& terrain, Rng& rng);

}  // namespace vmap::gridworld
