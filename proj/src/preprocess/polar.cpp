#include "touchdigits/preprocess/polar.hpp"

#include <cmath>

#include "touchdigits/preprocess/spline.hpp"
#include "touchdigits/util/error.hpp"
#include "touchdigits/util/log.hpp"

namespace touchdigits::preprocess {

std::string to_string(InputMethod method) {
  return method == InputMethod::thumb ? "thumb" : "finger";
}

InputMethod parse_input_method(const std::string& name) {
  if (name == "finger") return InputMethod::finger;
  if (name == "thumb") return InputMethod::thumb;
  throw InvalidArgument("unknown input method '" + name + "'");
}

std::size_t Glyph::point_count() const {
  std::size_t n = 0;
  for (const auto& s : strokes) n += s.points.size();
  return n;
}

Stroke dedupe_stroke(const Stroke& stroke) {
  Stroke out;
  out.points.reserve(stroke.points.size());
  for (const auto& p : stroke.points) {
    if (!out.points.empty() && out.points.back().x == p.x && out.points.back().y == p.y) {
      continue;
    }
    out.points.push_back(p);
  }
  return out;
}

std::vector<PolarVector> polar_vectors(const Stroke& stroke) {
  std::vector<PolarVector> out;
  const auto& pts = stroke.points;
  if (pts.size() < 2) return out;
  out.reserve(pts.size() - 1);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double dx = pts[i + 1].x - pts[i].x;
    const double dy = pts[i + 1].y - pts[i].y;
    // Screen y grows downward; negate so that +pi/2 is up.
    out.push_back({std::atan2(-dy, dx), std::hypot(dx, dy)});
  }
  return out;
}

PolarSequence pad_or_truncate(std::vector<PolarVector> vectors, std::size_t max_len) {
  PolarSequence seq;
  if (vectors.size() > max_len) {
    seq.dropped = vectors.size() - max_len;
    log::warn("polar sequence of " + std::to_string(vectors.size()) +
              " vectors truncated to " + std::to_string(max_len));
    vectors.resize(max_len);
  }
  seq.true_length = vectors.size();
  vectors.resize(max_len, PolarVector{});
  seq.vectors = std::move(vectors);
  return seq;
}

PolarSequence to_polar_sequence(const Stroke& stroke, std::size_t max_len) {
  const Stroke clean = dedupe_stroke(stroke);
  if (clean.points.size() < 2) throw InvalidArgument("degenerate stroke");
  return pad_or_truncate(polar_vectors(clean), max_len);
}

const Stroke& longest_stroke(const Glyph& glyph) {
  if (glyph.strokes.empty()) throw InvalidArgument("glyph has no strokes");
  std::size_t best = 0;
  double best_len = arclength(glyph.strokes[0]);
  for (std::size_t i = 1; i < glyph.strokes.size(); ++i) {
    const double len = arclength(glyph.strokes[i]);
    // Relative slack so numerically equal lengths keep the earlier stroke.
    if (len > best_len * (1.0 + 1e-12) + 1e-12) {
      best = i;
      best_len = len;
    }
  }
  return glyph.strokes[best];
}

}  // namespace touchdigits::preprocess
