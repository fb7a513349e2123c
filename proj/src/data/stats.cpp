#include "touchdigits/data/stats.hpp"

#include <cmath>
#include <set>

#include "touchdigits/preprocess/polar.hpp"
#include "touchdigits/preprocess/spline.hpp"

namespace touchdigits::data {

DatasetStats dataset_stats(const Dataset& dataset) {
  DatasetStats st;
  st.glyph_count = dataset.glyphs.size();
  std::set<std::string> subjects;
  std::array<double, 10> sum{};
  std::array<double, 10> sum_sq{};
  for (const auto& g : dataset.glyphs) {
    const auto label = static_cast<std::size_t>(g.label);
    subjects.insert(g.subject_id);
    ++st.per_digit.at(label);
    if (g.input_method == preprocess::InputMethod::thumb) {
      ++st.thumb_count;
    } else {
      ++st.finger_count;
    }
    const double len = preprocess::arclength(g);
    sum[label] += len;
    sum_sq[label] += len * len;
    std::size_t seq = 0;
    if (!g.strokes.empty()) {
      seq = preprocess::polar_vectors(preprocess::dedupe_stroke(preprocess::longest_stroke(g))).size();
    }
    ++st.sequence_length_histogram[seq];
    st.max_sequence_length = std::max(st.max_sequence_length, seq);
  }
  st.subject_count = subjects.size();
  for (std::size_t c = 0; c < 10; ++c) {
    if (st.per_digit[c] == 0) continue;
    const double n = static_cast<double>(st.per_digit[c]);
    st.arclength_mean[c] = sum[c] / n;
    st.arclength_std[c] = std::sqrt(std::max(0.0, sum_sq[c] / n - st.arclength_mean[c] * st.arclength_mean[c]));
  }
  return st;
}

nlohmann::json to_json(const DatasetStats& stats) {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [len, count] : stats.sequence_length_histogram) hist[std::to_string(len)] = count;
  return {{"glyph_count", stats.glyph_count},
          {"subject_count", stats.subject_count},
          {"per_digit", stats.per_digit},
          {"input_method", {{"finger", stats.finger_count}, {"thumb", stats.thumb_count}}},
          {"arclength_mean", stats.arclength_mean},
          {"arclength_std", stats.arclength_std},
          {"sequence_length_histogram", hist},
          {"max_sequence_length", stats.max_sequence_length}};
}

}  // namespace touchdigits::data
