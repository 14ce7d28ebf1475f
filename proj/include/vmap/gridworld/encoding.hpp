#pragma once

#include <array>

#include "vmap/gridworld/world_map.hpp"
#include "vmap/numerics/tensor.hpp"

namespace vmap::gridworld {

// Symbol ids: object kinds 0..9, then grass, then water.
inline constexpr int kGrassSymbol = 10;
inline constexpr int kWaterSymbol = 11;
inline constexpr std::size_t kSymbolCount = 12;

using SymbolGrid = std::array<int, kCellCount>;

// [12 x 10 x 10] indicator planes in symbol order; terrain planes partition the map.
numerics::Tensor encode_binary(const WorldMap& map);
WorldMap decode_binary(const numerics::Tensor& planes, std::string map_id, std::uint64_t seed);

// Per-cell symbol: the object kind if present, else the terrain.
SymbolGrid encode_categorical(const WorldMap& map);

}  // namespace vmap::gridworld
