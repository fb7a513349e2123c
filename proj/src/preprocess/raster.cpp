#include "touchdigits/preprocess/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "touchdigits/preprocess/polar.hpp"
#include "touchdigits/preprocess/spline.hpp"
#include "touchdigits/util/error.hpp"

namespace touchdigits::preprocess {
namespace {

constexpr double kCenter = static_cast<double>(kBitmapSide) / 2.0;

struct Extent {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();

  void add(double x, double y) {
    min_x = std::min(min_x, x);
    min_y = std::min(min_y, y);
    max_x = std::max(max_x, x);
    max_y = std::max(max_y, y);
  }
  double size() const { return std::max(max_x - min_x, max_y - min_y); }
};

// Dense polylines for each stroke. The per-segment sample count depends only
// on the chord relative to the glyph's touch-point extent, so it is the same
// for any similarity transform of the glyph.
std::vector<std::vector<Point2>> ink_paths(const Glyph& glyph) {
  Extent touch;
  for (const auto& s : glyph.strokes) {
    for (const auto& p : s.points) touch.add(p.x, p.y);
  }
  const double reference = touch.size();
  std::vector<std::vector<Point2>> paths;
  for (const auto& stroke : glyph.strokes) {
    const Stroke clean = dedupe_stroke(stroke);
    if (clean.points.empty()) continue;
    std::vector<Point2> pts;
    pts.reserve(clean.points.size());
    for (const auto& p : clean.points) pts.push_back({p.x, p.y});
    if (pts.size() == 1 || reference <= 0.0) {
      paths.push_back({pts.front()});
      continue;
    }
    paths.push_back(sample_catmull_rom(pts, [&](std::size_t, double chord) {
      return std::max<std::size_t>(8, static_cast<std::size_t>(std::ceil(chord / reference * 40.0)));
    }));
  }
  return paths;
}

double segment_distance(double px, double py, const Point2& a, const Point2& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((px - a.x) * dx + (py - a.y) * dy) / len2, 0.0, 1.0);
  return std::hypot(px - (a.x + t * dx), py - (a.y + t * dy));
}

// Round brush with a one-pixel linear falloff around its radius.
void stamp_segment(std::vector<double>& img, const Point2& a,
                   const Point2& b, double radius) {
  const double reach = radius + 0.5;
  const auto lo = [&](double v) {
    return static_cast<long>(std::max(0.0, std::floor(v - reach - 0.5)));
  };
  const auto hi = [&](double v) {
    return static_cast<long>(std::min<double>(kBitmapSide - 1, std::ceil(v + reach)));
  };
  const long c0 = lo(std::min(a.x, b.x));
  const long c1 = hi(std::max(a.x, b.x));
  const long r0 = lo(std::min(a.y, b.y));
  const long r1 = hi(std::max(a.y, b.y));
  for (long r = r0; r <= r1; ++r) {
    for (long c = c0; c <= c1; ++c) {
      const double d = segment_distance(static_cast<double>(c) + 0.5,
                                        static_cast<double>(r) + 0.5, a, b);
      const double v = std::clamp(reach - d, 0.0, 1.0);
      auto& px = img[static_cast<std::size_t>(r) * kBitmapSide + static_cast<std::size_t>(c)];
      px = std::max(px, v);
    }
  }
}

std::vector<double> draw(
    const std::vector<std::vector<Point2>>& paths, double radius) {
  std::vector<double> img(kBitmapSide * kBitmapSide, 0.0);
  for (const auto& path : paths) {
    if (path.size() == 1) {
      stamp_segment(img, path[0], path[0], radius);
      continue;
    }
    for (std::size_t i = 0; i + 1 < path.size(); ++i) stamp_segment(img, path[i], path[i + 1], radius);
  }
  return img;
}

CenterOfMass mass_center(const std::vector<double>& img) {
  double total = 0.0;
  double sx = 0.0;
  double sy = 0.0;
  for (std::size_t r = 0; r < kBitmapSide; ++r) {
    for (std::size_t c = 0; c < kBitmapSide; ++c) {
      const double v = img[r * kBitmapSide + c];
      total += v;
      sx += v * (static_cast<double>(c) + 0.5);
      sy += v * (static_cast<double>(r) + 0.5);
    }
  }
  if (total <= 0.0) return {kCenter, kCenter};
  return {sx / total, sy / total};
}

struct Similarity {
  double scale = 1.0;
  double src_x = 0.0, src_y = 0.0;  // source point mapped to (dst_x, dst_y)
  double dst_x = kCenter, dst_y = kCenter;

  Point2 apply(double x, double y) const {
    return {(x - src_x) * scale + dst_x, (y - src_y) * scale + dst_y};
  }
};

}  // namespace

Glyph normalize_for_raster(const Glyph& glyph, const RasterOptions& options) {
  if (glyph.point_count() == 0) throw InvalidArgument("cannot rasterize an empty glyph");
  const auto paths = ink_paths(glyph);
  Extent ink;
  for (const auto& path : paths) {
    for (const auto& p : path) ink.add(p.x, p.y);
  }
  Similarity map;
  const double size = ink.size();
  map.scale = size > 0.0 ? options.box / size : 1.0;
  map.src_x = 0.5 * (ink.min_x + ink.max_x);
  map.src_y = 0.5 * (ink.min_y + ink.max_y);

  // First pass: find where the ink's center of mass lands, then shift it.
  std::vector<std::vector<Point2>> placed = paths;
  for (auto& path : placed) {
    for (auto& p : path) p = map.apply(p.x, p.y);
  }
  const CenterOfMass com = mass_center(draw(placed, options.brush_diameter / 2.0));
  map.dst_x += kCenter - com.x;
  map.dst_y += kCenter - com.y;

  Glyph out = glyph;
  for (auto& stroke : out.strokes) {
    for (auto& p : stroke.points) {
      const Point2 q = map.apply(p.x, p.y);
      p.x = q.x;
      p.y = q.y;
    }
  }
  return out;
}

Bitmap28 render(const Glyph& normalized, const RasterOptions& options) {
  const auto img = draw(ink_paths(normalized), options.brush_diameter / 2.0);
  Bitmap28 bitmap;
  for (std::size_t i = 0; i < img.size(); ++i) {
    bitmap.pixels[i] = static_cast<float>(std::clamp(img[i], 0.0, 1.0));
  }
  return bitmap;
}

Bitmap28 rasterize(const Glyph& glyph, const RasterOptions& options) {
  return render(normalize_for_raster(glyph, options), options);
}

CenterOfMass center_of_mass(const Bitmap28& bitmap) {
  std::vector<double> img(kBitmapSide * kBitmapSide, 0.0);
  std::copy(bitmap.pixels.begin(), bitmap.pixels.end(), img.begin());
  return mass_center(img);
}

}  // namespace touchdigits::preprocess
