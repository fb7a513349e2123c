#include "touchdigits/preprocess/spline.hpp"

#include <cmath>

namespace touchdigits::preprocess {
namespace {

double distance(const Point2& a, const Point2& b) { return std::hypot(b.x - a.x, b.y - a.y); }

Point2 lerp(const Point2& a, const Point2& b, double ta, double tb, double t) {
  const double wa = (tb - t) / (tb - ta);
  const double wb = (t - ta) / (tb - ta);
  return {wa * a.x + wb * b.x, wa * a.y + wb * b.y};
}

// Barry-Goldman evaluation of the segment p1 -> p2 at knot value t.
struct Segment {
  Point2 p0, p1, p2, p3;
  double t0, t1, t2, t3;

  Segment(Point2 a, Point2 b, Point2 c, Point2 d) : p0(a), p1(b), p2(c), p3(d) {
    t0 = 0.0;
    t1 = t0 + std::sqrt(distance(p0, p1));
    t2 = t1 + std::sqrt(distance(p1, p2));
    t3 = t2 + std::sqrt(distance(p2, p3));
  }

  Point2 at(double u) const {
    const double t = t1 + u * (t2 - t1);
    const Point2 a1 = lerp(p0, p1, t0, t1, t);
    const Point2 a2 = lerp(p1, p2, t1, t2, t);
    const Point2 a3 = lerp(p2, p3, t2, t3, t);
    const Point2 b1 = lerp(a1, a2, t0, t2, t);
    const Point2 b2 = lerp(a2, a3, t1, t3, t);
    return lerp(b1, b2, t1, t2, t);
  }
};

Point2 reflect(const Point2& anchor, const Point2& other) {
  return {2.0 * anchor.x - other.x, 2.0 * anchor.y - other.y};
}

}  // namespace

std::vector<Point2> sample_catmull_rom(
    std::span<const Point2> points,
    const std::function<std::size_t(std::size_t, double)>& samples_for_segment) {
  std::vector<Point2> out;
  if (points.empty()) return out;
  out.push_back(points.front());
  const std::size_t n = points.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Point2& p1 = points[i];
    const Point2& p2 = points[i + 1];
    const Point2 p0 = i == 0 ? reflect(p1, p2) : points[i - 1];
    const Point2 p3 = i + 2 == n ? reflect(p2, p1) : points[i + 2];
    const Segment seg(p0, p1, p2, p3);
    const std::size_t steps = std::max<std::size_t>(1, samples_for_segment(i, distance(p1, p2)));
    for (std::size_t k = 1; k < steps; ++k) {
      out.push_back(seg.at(static_cast<double>(k) / static_cast<double>(steps)));
    }
    out.push_back(p2);
  }
  return out;
}

std::vector<double> segment_arclengths(const Stroke& stroke) {
  const auto& raw = stroke.points;
  std::vector<double> lengths(raw.size() > 1 ? raw.size() - 1 : 0, 0.0);
  if (raw.size() < 2) return lengths;

  std::vector<Point2> distinct;
  std::vector<std::size_t> raw_segment;  // raw index of each distinct segment
  distinct.push_back({raw[0].x, raw[0].y});
  for (std::size_t i = 1; i < raw.size(); ++i) {
    if (raw[i].x == raw[i - 1].x && raw[i].y == raw[i - 1].y) continue;
    raw_segment.push_back(i - 1);
    distinct.push_back({raw[i].x, raw[i].y});
  }
  if (distinct.size() < 2) return lengths;

  std::vector<std::size_t> boundaries{0};
  const auto samples = sample_catmull_rom(distinct, [&](std::size_t, double chord) {
    const auto steps = std::max<std::size_t>(16, static_cast<std::size_t>(std::ceil(chord / 2.0)));
    boundaries.push_back(boundaries.back() + steps);
    return steps;
  });
  for (std::size_t s = 0; s + 1 < boundaries.size(); ++s) {
    double len = 0.0;
    for (std::size_t k = boundaries[s]; k < boundaries[s + 1]; ++k) {
      len += distance(samples[k], samples[k + 1]);
    }
    lengths[raw_segment[s]] = len;
  }
  return lengths;
}

double arclength(const Stroke& stroke) {
  double total = 0.0;
  for (double len : segment_arclengths(stroke)) total += len;
  return total;
}

double arclength(const Glyph& glyph) {
  double total = 0.0;
  for (const auto& stroke : glyph.strokes) total += arclength(stroke);
  return total;
}

}  // namespace touchdigits::preprocess
