#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "touchdigits/data/dataset.hpp"

namespace touchdigits::data {

// Randomness applied to the digit templates. Lengths are in pixels at the
// 300-pixel template scale.
struct NoiseProfile {
  double max_rotation_deg = 15.0;
  double scale_min = 0.7;
  double scale_max = 1.3;
  double max_shear = 0.1;
  double max_translation = 120.0;  // uniform offset of the glyph on screen
  double point_sigma = 1.5;        // Gaussian jitter per point
  double thumb_sigma_factor = 1.5; // thumbs are drawn less precisely
  // Touch sampling rate. 0 emits the template vertices as they are.
  double sample_hz = 60.0;
  double speed_min = 700.0;  // mean drawing speed range, px/s
  double speed_max = 1400.0;
  double speed_swing = 0.4;  // speed dips by this fraction at stroke ends
  std::size_t max_points_per_stroke = 131;  // longer strokes are drawn faster

  // No jitter, no noise, no resampling.
  static NoiseProfile zero();
};

struct Template {
  int label = 0;
  std::vector<preprocess::Stroke> strokes;  // vertices in drawing order
};

// Every template variant, including the multi-stroke forms of 4, 5 and 7.
const std::vector<Template>& digit_templates();

// `count` glyphs with labels i % 10 (balanced), ids 0..count-1 and the
// synthetic subject. The result depends only on the arguments.
Dataset synth_generate(std::size_t count, std::uint64_t seed, const NoiseProfile& profile = {});

}  // namespace touchdigits::data
