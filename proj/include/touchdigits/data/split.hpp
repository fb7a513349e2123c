#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "touchdigits/data/dataset.hpp"

namespace touchdigits::data {

enum class Bucket { train, validation, test };
std::string to_string(Bucket bucket);

struct SplitAssignment {
  std::map<std::uint64_t, Bucket> bucket_of;
  std::uint64_t seed = 0;
};

struct SplitOptions {
  std::array<double, 3> proportions{0.6, 0.2, 0.2};
  // Keep every subject's glyphs in one bucket. Proportions then only hold
  // approximately and per-class stratification is not attempted.
  bool group_by_subject = false;
};

// Sizes for n items by largest-remainder rounding; equal remainders favour
// the later bucket.
std::array<std::size_t, 3> largest_remainder(std::size_t n, const std::array<double, 3>& proportions);

// Stratified by label and deterministic in `seed`. Per-class bucket counts
// stay within one of the exact proportions while bucket totals match
// largest_remainder over the whole dataset. Classes with fewer than five
// glyphs produce a warning.
SplitAssignment split(const Dataset& dataset, std::uint64_t seed, const SplitOptions& options = {});

struct SplitGlyphs {
  std::vector<Glyph> train;
  std::vector<Glyph> validation;
  std::vector<Glyph> test;
};

// Glyphs of each bucket in dataset order.
SplitGlyphs apply_split(const Dataset& dataset, const SplitAssignment& assignment);

}  // namespace touchdigits::data
