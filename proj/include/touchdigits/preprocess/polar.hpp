#pragma once

#include <cstddef>
#include <vector>

#include "touchdigits/preprocess/glyph.hpp"

namespace touchdigits::preprocess {

inline constexpr std::size_t kPolarLength = 130;

// Displacement to the next touch point. The angle is measured from the
// positive x axis with +pi/2 pointing up the screen.
struct PolarVector {
  double angle = 0.0;
  double length = 0.0;
  bool operator==(const PolarVector&) const = default;
};

struct PolarSequence {
  std::vector<PolarVector> vectors;  // always max_len entries; padding is (0, 0)
  std::size_t true_length = 0;
  std::size_t dropped = 0;  // vectors cut off by truncation
};

// Collapses consecutive points with identical coordinates, keeping the
// earliest timestamp.
Stroke dedupe_stroke(const Stroke& stroke);

// Raw displacement vectors between consecutive points (n points -> n-1).
std::vector<PolarVector> polar_vectors(const Stroke& stroke);

// Zero-pads to max_len, or keeps the first max_len vectors and warns.
PolarSequence pad_or_truncate(std::vector<PolarVector> vectors,
                              std::size_t max_len = kPolarLength);

// Dedupes, converts and pads. Throws InvalidArgument("degenerate stroke")
// when fewer than two distinct points remain.
PolarSequence to_polar_sequence(const Stroke& stroke, std::size_t max_len = kPolarLength);

// Stroke of maximal arclength; ties go to the earliest stroke.
const Stroke& longest_stroke(const Glyph& glyph);

}  // namespace touchdigits::preprocess
