#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "touchdigits/nn/checkpoint.hpp"
#include "touchdigits/preprocess/glyph.hpp"

namespace touchdigits::train {

using preprocess::Glyph;

// Glyphs encoded for one model as a single batch tensor.
struct EncodedSet {
  nn::Tensor<float> inputs;  // [N, ...input_shape]
  std::vector<int> labels;
  std::vector<std::uint64_t> ids;
  std::size_t skipped = 0;  // degenerate glyphs left out

  std::size_t size() const { return labels.size(); }
};

// Encodes glyphs with the model's preprocessing. Labels outside 0-9 throw
// InvalidArgument. Glyphs too short for the polar encoding are encoded as
// zeros when `allow_degenerate`, otherwise skipped and counted.
EncodedSet encode_set(std::span<const Glyph> glyphs, const nn::ModelSpec& spec,
                      const nn::FeatureNormalization& norm, bool allow_degenerate);

struct Metrics {
  std::size_t count = 0;
  double accuracy = 0.0;
  double loss = 0.0;  // mean cross-entropy
  std::array<std::array<std::size_t, 10>, 10> confusion{};  // [true][predicted]
  std::array<double, 10> precision{};
  std::array<double, 10> recall{};
  std::vector<int> predictions;
  std::vector<float> probabilities;  // [count, 10] row-major
};

inline constexpr std::size_t kEvalBatch = 128;

// Dropout off, fixed batching, so results only depend on the inputs.
nn::Tensor<float> predict_set(const nn::Network<float>& net, const nn::Tensor<float>& inputs);

Metrics compute_metrics(const nn::Tensor<float>& probabilities, std::span<const int> labels);

Metrics evaluate(const nn::Network<float>& net, const EncodedSet& set);

// Evaluates every glyph; degenerate polar inputs are encoded as zeros so
// every glyph counts.
Metrics evaluate(const nn::Checkpoint& checkpoint, std::span<const Glyph> glyphs);

nlohmann::json to_json(const Metrics& metrics);

}  // namespace touchdigits::train
