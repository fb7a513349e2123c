#pragma once

#include <array>
#include <cstddef>
#include <map>

#include "json.hpp"
#include "touchdigits/data/dataset.hpp"

namespace touchdigits::data {

struct DatasetStats {
  std::size_t glyph_count = 0;
  std::size_t subject_count = 0;
  std::array<std::size_t, 10> per_digit{};
  std::size_t finger_count = 0;
  std::size_t thumb_count = 0;
  std::array<double, 10> arclength_mean{};  // whole glyph, pixels
  std::array<double, 10> arclength_std{};
  // Longest-stroke polar vector count (before padding or truncation).
  std::map<std::size_t, std::size_t> sequence_length_histogram;
  std::size_t max_sequence_length = 0;
};

DatasetStats dataset_stats(const Dataset& dataset);
nlohmann::json to_json(const DatasetStats& stats);

}  // namespace touchdigits::data
