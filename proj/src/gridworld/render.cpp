#include "vmap/gridworld/render.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace vmap::gridworld {
namespace {

struct Rgb {
  std::uint8_t r, g, b;
};

constexpr std::array<char, kObjectKindCount> kGlyphs = {'^', '*', 'D', 'O', 'H', 'S', 'r', 't', 'h', 'u'};
constexpr std::array<Rgb, kObjectKindCount> kObjectColours = {{{230, 120, 20},
                                                               {250, 220, 30},
                                                               {60, 200, 220},
                                                               {240, 240, 240},
                                                               {220, 30, 60},
                                                               {30, 30, 30},
                                                               {130, 130, 130},
                                                               {20, 110, 20},
                                                               {140, 80, 40},
                                                               {170, 40, 170}}};

Rgb heat(double t) {
  t = std::clamp(t, 0.0, 1.0);
  // dark blue -> teal -> yellow
  const double r = t < 0.5 ? 20 + t * 2 * 20 : 40 + (t - 0.5) * 2 * 210;
  const double g = t < 0.5 ? 30 + t * 2 * 140 : 170 + (t - 0.5) * 2 * 70;
  const double b = t < 0.5 ? 110 + t * 2 * 40 : 150 - (t - 0.5) * 2 * 120;
  return {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)};
}

std::size_t first_max(const Grid& values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

void outline(Image& img, int x, int y, int size, Rgb c) {
  const int t = std::max(1, size / 8);
  img.fill_rect(x, y, size, t, c.r, c.g, c.b);
  img.fill_rect(x, y + size - t, size, t, c.r, c.g, c.b);
  img.fill_rect(x, y, t, size, c.r, c.g, c.b);
  img.fill_rect(x + size - t, y, t, size, c.r, c.g, c.b);
}

}  // namespace

char glyph(ObjectKind kind) { return kGlyphs[static_cast<std::size_t>(kind)]; }

std::string render_ascii(const WorldMap& map, const Overlay& overlay) {
  std::vector<bool> on_path(kCellCount, false);
  for (Cell c : overlay.path) {
    if (c.on_grid()) on_path[c.index()] = true;
  }
  std::string out;
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) {
      const Cell cell{r, c};
      char ch = map.is_grass(cell) ? kGrassGlyph : kWaterGlyph;
      if (on_path[cell.index()]) ch = kPathGlyph;
      if (overlay.goal && *overlay.goal == cell) ch = kGoalGlyph;
      if (const auto obj = map.object_at(cell)) ch = glyph(*obj);
      out += ch;
      if (c + 1 < kGridSize) out += ' ';
    }
    out += '\n';
  }
  if (overlay.goal) {
    out += "goal (" + std::to_string(overlay.goal->row) + "," + std::to_string(overlay.goal->col) + ")";
    if (const auto obj = map.object_at(*overlay.goal)) out += std::string(" on ") + glyph(*obj);
    out += '\n';
  }
  return out;
}

std::string render_values_ascii(const Grid& values) {
  const std::size_t best = first_max(values);
  std::string out;
  char buf[16];
  for (std::size_t i = 0; i < kCellCount; ++i) {
    std::snprintf(buf, sizeof buf, "%6.2f%c", values[i], i == best ? '*' : ' ');
    out += buf;
    if (i % kGridSize == kGridSize - 1) out += '\n';
  }
  return out;
}

void Image::fill_rect(int x, int y, int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  for (int yy = std::max(0, y); yy < std::min(height, y + h); ++yy) {
    for (int xx = std::max(0, x); xx < std::min(width, x + w); ++xx) {
      const std::size_t p = (static_cast<std::size_t>(yy) * width + xx) * 3;
      rgb[p] = r;
      rgb[p + 1] = g;
      rgb[p + 2] = b;
    }
  }
}

Image render_map_image(const WorldMap& map, const Overlay& overlay, int scale) {
  if (scale < 1) throw std::invalid_argument("render scale must be positive");
  Image img{kGridSize * scale, kGridSize * scale, {}};
  img.rgb.assign(static_cast<std::size_t>(img.width) * img.height * 3, 0);
  for (std::size_t i = 0; i < kCellCount; ++i) {
    const Cell c = Cell::from_index(i);
    const int x = c.col * scale, y = c.row * scale;
    if (map.terrain()[i] == Terrain::Grass) {
      img.fill_rect(x, y, scale, scale, 90, 170, 70);
    } else {
      img.fill_rect(x, y, scale, scale, 40, 90, 200);
    }
    if (const auto obj = map.objects()[i]) {
      const Rgb col = kObjectColours[static_cast<std::size_t>(*obj)];
      const int inset = scale / 4;
      img.fill_rect(x + inset, y + inset, scale - 2 * inset, scale - 2 * inset, col.r, col.g, col.b);
    }
  }
  for (Cell c : overlay.path) {
    const int dot = std::max(1, scale / 5);
    img.fill_rect(c.col * scale + (scale - dot) / 2, c.row * scale + (scale - dot) / 2, dot, dot, 250, 250, 250);
  }
  if (overlay.goal) outline(img, overlay.goal->col * scale, overlay.goal->row * scale, scale, {230, 20, 20});
  return img;
}

Image render_values_image(const Grid& values, int scale) {
  if (scale < 1) throw std::invalid_argument("render scale must be positive");
  Image img{kGridSize * scale, kGridSize * scale, {}};
  img.rgb.assign(static_cast<std::size_t>(img.width) * img.height * 3, 0);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double span = *hi - *lo;
  for (std::size_t i = 0; i < kCellCount; ++i) {
    const Cell c = Cell::from_index(i);
    const Rgb col = heat(span > 0 ? (values[i] - *lo) / span : 0.5);
    img.fill_rect(c.col * scale, c.row * scale, scale, scale, col.r, col.g, col.b);
  }
  const Cell best = Cell::from_index(first_max(values));
  outline(img, best.col * scale, best.row * scale, scale, {230, 20, 20});
  return img;
}

Image hstack(const std::vector<Image>& images, int gap) {
  Image out;
  for (const Image& im : images) {
    out.width += im.width;
    out.height = std::max(out.height, im.height);
  }
  if (!images.empty()) out.width += gap * static_cast<int>(images.size() - 1);
  out.rgb.assign(static_cast<std::size_t>(out.width) * out.height * 3, 255);
  int x0 = 0;
  for (const Image& im : images) {
    for (int y = 0; y < im.height; ++y) {
      std::copy_n(im.rgb.begin() + static_cast<std::ptrdiff_t>(y) * im.width * 3, im.width * 3,
                  out.rgb.begin() + (static_cast<std::ptrdiff_t>(y) * out.width + x0) * 3);
    }
    x0 += im.width + gap;
  }
  return out;
}

void write_ppm(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.rgb.data()), static_cast<std::streamsize>(image.rgb.size()));
}

}  // namespace vmap::gridworld
