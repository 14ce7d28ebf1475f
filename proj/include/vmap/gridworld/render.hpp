#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vmap/gridworld/world_map.hpp"

namespace vmap::gridworld {

char glyph(ObjectKind kind);
inline constexpr char kGrassGlyph = '.';
inline constexpr char kWaterGlyph = '~';
inline constexpr char kGoalGlyph = 'G';
inline constexpr char kPathGlyph = 'o';

struct Overlay {
  std::optional<Cell> goal;
  std::vector<Cell> path;
};

// One text row per grid row. The goal is drawn as 'G' unless an object sits
// there (then the object glyph is bracketed in the legend line); path cells
// without objects are drawn as 'o'.
std::string render_ascii(const WorldMap& map, const Overlay& overlay = {});

// Fixed-width numeric grid; the row-major first maximum is starred.
std::string render_values_ascii(const Grid& values);

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  void fill_rect(int x, int y, int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};

Image render_map_image(const WorldMap& map, const Overlay& overlay, int scale);
Image render_values_image(const Grid& values, int scale);
// Side-by-side with a `gap`-pixel white separator.
Image hstack(const std::vector<Image>& images, int gap = 4);

// Binary portable pixmap (P6).
void write_ppm(const std::filesystem::path& path, const Image& image);

}  // namespace vmap::gridworld
