#include "vmap/gridworld/encoding.hpp"

namespace vmap::gridworld {

numerics::Tensor encode_binary(const WorldMap& map) {
  numerics::Tensor planes = numerics::Tensor::zeros({kSymbolCount, kGridSize, kGridSize});
  for (std::size_t i = 0; i < kCellCount; ++i) {
    if (const auto obj = map.objects()[i]) planes[static_cast<std::size_t>(*obj) * kCellCount + i] = 1.0;
    const int terrain = map.terrain()[i] == Terrain::Grass ? kGrassSymbol : kWaterSymbol;
    planes[static_cast<std::size_t>(terrain) * kCellCount + i] = 1.0;
  }
  return planes;
}

WorldMap decode_binary(const numerics::Tensor& planes, std::string map_id, std::uint64_t seed) {
  if (planes.shape() != numerics::Shape{kSymbolCount, kGridSize, kGridSize}) {
    throw numerics::ShapeError("decode_binary: expected [12x10x10], got " + numerics::shape_string(planes.shape()));
  }
  WorldMap::TerrainGrid terrain{};
  WorldMap::ObjectGrid objects{};
  for (std::size_t i = 0; i < kCellCount; ++i) {
    const bool grass = planes[kGrassSymbol * kCellCount + i] == 1.0;
    const bool water = planes[kWaterSymbol * kCellCount + i] == 1.0;
    if (grass == water) throw InvalidMap("decode_binary: cell " + std::to_string(i) + " has no unique terrain");
    terrain[i] = grass ? Terrain::Grass : Terrain::Water;
    for (std::size_t k = 0; k < kObjectKindCount; ++k) {
      if (planes[k * kCellCount + i] != 1.0) continue;
      if (objects[i]) throw InvalidMap("decode_binary: two objects in cell " + std::to_string(i));
      objects[i] = static_cast<ObjectKind>(k);
    }
  }
  return WorldMap(std::move(map_id), seed, terrain, objects);
}

SymbolGrid encode_categorical(const WorldMap& map) {
  SymbolGrid ids{};
  for (std::size_t i = 0; i < kCellCount; ++i) {
    if (const auto obj = map.objects()[i]) {
      ids[i] = static_cast<int>(*obj);
    } else {
      ids[i] = map.terrain()[i] == Terrain::Grass ? kGrassSymbol : kWaterSymbol;
    }
  }
  return ids;
}

}  // namespace vmap::gridworld
