#include "touchdigits/preprocess/features.hpp"

#include <cmath>
#include <numbers>

#include "touchdigits/preprocess/polar.hpp"
#include "touchdigits/preprocess/raster.hpp"
#include "touchdigits/util/error.hpp"

namespace touchdigits::preprocess {

std::string to_string(PolarInput input) {
  switch (input) {
    case PolarInput::angle: return "angle";
    case PolarInput::distance: return "distance";
    case PolarInput::both: return "both";
  }
  return "both";
}

PolarInput parse_polar_input(const std::string& name) {
  if (name == "angle") return PolarInput::angle;
  if (name == "distance" || name == "length") return PolarInput::distance;
  if (name == "both") return PolarInput::both;
  throw InvalidArgument("unknown polar input '" + name + "' (angle|distance|both)");
}

std::size_t channel_count(PolarInput input) { return input == PolarInput::both ? 2 : 1; }

nn::Tensor<float> encode_bitmap(const Glyph& glyph) {
  const Bitmap28 bitmap = rasterize(glyph);
  return nn::Tensor<float>({kBitmapSide, kBitmapSide, 1},
                           std::vector<float>(bitmap.pixels.begin(), bitmap.pixels.end()));
}

nn::Tensor<float> encode_polar(const Glyph& glyph, PolarInput input,
                               const nn::FeatureNormalization& norm, bool allow_degenerate) {
  const std::size_t channels = channel_count(input);
  nn::Tensor<float> out({kPolarLength, channels});
  PolarSequence seq;
  try {
    seq = to_polar_sequence(longest_stroke(glyph));
  } catch (const InvalidArgument&) {
    if (allow_degenerate) return out;
    throw;
  }
  const double inv_std = norm.length_std > 0.0 ? 1.0 / norm.length_std : 1.0;
  for (std::size_t i = 0; i < seq.true_length; ++i) {
    const double angle = seq.vectors[i].angle / std::numbers::pi;
    const double length = (seq.vectors[i].length - norm.length_mean) * inv_std;
    float* row = out.data() + i * channels;
    switch (input) {
      case PolarInput::angle: row[0] = static_cast<float>(angle); break;
      case PolarInput::distance: row[0] = static_cast<float>(length); break;
      case PolarInput::both:
        row[0] = static_cast<float>(angle);
        row[1] = static_cast<float>(length);
        break;
    }
  }
  return out;
}

nn::FeatureNormalization fit_length_normalization(std::span<const Glyph> glyphs) {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t n = 0;
  for (const auto& g : glyphs) {
    if (g.strokes.empty()) continue;
    const auto vectors = polar_vectors(dedupe_stroke(longest_stroke(g)));
    const std::size_t used = std::min(vectors.size(), kPolarLength);
    for (std::size_t i = 0; i < used; ++i) {
      sum += vectors[i].length;
      sum_sq += vectors[i].length * vectors[i].length;
    }
    n += used;
  }
  nn::FeatureNormalization norm;
  if (n == 0) return norm;
  norm.length_mean = sum / static_cast<double>(n);
  const double var = std::max(0.0, sum_sq / static_cast<double>(n) - norm.length_mean * norm.length_mean);
  norm.length_std = var > 0.0 ? std::sqrt(var) : 1.0;
  return norm;
}

nn::Tensor<float> encode_for_model(const Glyph& glyph, const nn::ModelSpec& spec,
                                   const nn::FeatureNormalization& norm, bool allow_degenerate) {
  if (spec.name == "bitmap2d") return encode_bitmap(glyph);
  if (spec.name == "polar1d") {
    return encode_polar(glyph, parse_polar_input(spec.input_mode), norm, allow_degenerate);
  }
  throw InvalidArgument("no input encoding for model '" + spec.name + "'");
}

}  // namespace touchdigits::preprocess
