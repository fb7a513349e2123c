#pragma once

#include "touchdigits/preprocess/glyph.hpp"

namespace touchdigits::preprocess {

// Earliest prefix of the glyph (in drawing order, across strokes, at
// touch-point granularity) whose cumulative arclength reaches
// fraction * total arclength. Cumulative lengths are measured along the
// full glyph's interpolated strokes, so prefixes are nested: a <= b implies
// prefix(a) is a prefix of prefix(b). fraction 1 returns the glyph unchanged
// and fraction 0 returns its first touch point.
Glyph completion_prefix(const Glyph& glyph, double fraction);

}  // namespace touchdigits::preprocess
