#pragma once

#include <span>
#include <string>

#include "touchdigits/nn/checkpoint.hpp"
#include "touchdigits/nn/tensor.hpp"
#include "touchdigits/preprocess/glyph.hpp"

namespace touchdigits::preprocess {

// Which polar channels feed the 1D model.
enum class PolarInput { angle, distance, both };

std::string to_string(PolarInput input);
// Accepts angle, distance (alias: length) and both.
PolarInput parse_polar_input(const std::string& name);
std::size_t channel_count(PolarInput input);

// [28, 28, 1] bitmap of the glyph.
nn::Tensor<float> encode_bitmap(const Glyph& glyph);

// [130, C] sequence from the glyph's longest stroke. Angles are divided by
// pi; lengths are standardized with `norm`. Padding stays exactly zero.
// A longest stroke with fewer than two distinct points throws
// InvalidArgument unless `allow_degenerate`, which yields all zeros.
nn::Tensor<float> encode_polar(const Glyph& glyph, PolarInput input,
                               const nn::FeatureNormalization& norm,
                               bool allow_degenerate = false);

// Mean and standard deviation of the unpadded longest-stroke vector lengths.
nn::FeatureNormalization fit_length_normalization(std::span<const Glyph> glyphs);

// Encodes according to the model the checkpoint describes.
nn::Tensor<float> encode_for_model(const Glyph& glyph, const nn::ModelSpec& spec,
                                   const nn::FeatureNormalization& norm,
                                   bool allow_degenerate = false);

}  // namespace touchdigits::preprocess
