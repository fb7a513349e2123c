#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "touchdigits/preprocess/glyph.hpp"

namespace touchdigits::preprocess {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// Centripetal Catmull-Rom interpolation (alpha = 1/2) through every point.
// End segments use reflected phantom points, so two points give the chord
// and collinear, evenly spaced points give a straight line.
//
// `samples_for_segment(i, chord)` returns how many sub-intervals to use
// between points i and i+1 (values below 1 are treated as 1). Consecutive
// points must be distinct. The result starts at points.front(), ends at
// points.back() and passes through every input point.
std::vector<Point2> sample_catmull_rom(
    std::span<const Point2> points,
    const std::function<std::size_t(std::size_t, double)>& samples_for_segment);

// Arclength of each segment of the interpolated stroke, indexed like the
// raw points (size n-1). Duplicate consecutive points contribute 0.
std::vector<double> segment_arclengths(const Stroke& stroke);

// Length in pixels of the interpolated stroke; 0 for a single point.
double arclength(const Stroke& stroke);

double arclength(const Glyph& glyph);

}  // namespace touchdigits::preprocess
