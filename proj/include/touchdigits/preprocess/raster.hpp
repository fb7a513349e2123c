#pragma once

#include <array>
#include <cstddef>

#include "touchdigits/preprocess/glyph.hpp"

namespace touchdigits::preprocess {

inline constexpr std::size_t kBitmapSide = 28;

// 28x28 intensities in [0, 1], row-major, row 0 at the top.
struct Bitmap28 {
  std::array<float, kBitmapSide * kBitmapSide> pixels{};

  float at(std::size_t row, std::size_t col) const { return pixels[row * kBitmapSide + col]; }
  float& at(std::size_t row, std::size_t col) { return pixels[row * kBitmapSide + col]; }
  bool operator==(const Bitmap28&) const = default;
};

struct RasterOptions {
  double box = 20.0;             // side of the square the ink is fitted into
  double brush_diameter = 1.8;   // at the 28-pixel scale
};

// Maps the glyph's touch points into bitmap coordinates: the interpolated
// ink is scaled (aspect preserving) into a `box`-sized square and shifted so
// its rendered center of mass lands on (14, 14).
Glyph normalize_for_raster(const Glyph& glyph, const RasterOptions& options = {});

// Renders the interpolated path of a glyph already in bitmap coordinates.
Bitmap28 render(const Glyph& normalized, const RasterOptions& options = {});

// normalize_for_raster followed by render.
Bitmap28 rasterize(const Glyph& glyph, const RasterOptions& options = {});

struct CenterOfMass {
  double x = 0.0;  // column axis, pixel centers at c + 0.5
  double y = 0.0;
};
CenterOfMass center_of_mass(const Bitmap28& bitmap);

}  // namespace touchdigits::preprocess
