#include "touchdigits/preprocess/completion.hpp"

#include "touchdigits/preprocess/spline.hpp"
#include "touchdigits/util/error.hpp"

namespace touchdigits::preprocess {

Glyph completion_prefix(const Glyph& glyph, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw InvalidArgument("completion fraction must lie in [0, 1]");
  }
  if (fraction == 1.0) return glyph;

  std::vector<std::vector<double>> segments;
  double total = 0.0;
  for (const auto& stroke : glyph.strokes) {
    segments.push_back(segment_arclengths(stroke));
    for (double len : segments.back()) total += len;
  }
  const double target = fraction * total;

  Glyph out = glyph;
  out.strokes.clear();
  double cumulative = 0.0;
  for (std::size_t s = 0; s < glyph.strokes.size(); ++s) {
    const auto& points = glyph.strokes[s].points;
    Stroke partial;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (i > 0) cumulative += segments[s][i - 1];
      partial.points.push_back(points[i]);
      if (cumulative >= target) {
        out.strokes.push_back(std::move(partial));
        return out;
      }
    }
    if (!partial.points.empty()) out.strokes.push_back(std::move(partial));
  }
  return out;
}

}  // namespace touchdigits::preprocess
