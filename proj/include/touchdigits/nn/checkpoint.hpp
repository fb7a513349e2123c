#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "touchdigits/nn/network.hpp"

namespace touchdigits::nn {

// Scaling applied to polar-vector lengths before they enter the network.
struct FeatureNormalization {
  double length_mean = 0.0;
  double length_std = 1.0;
  bool operator==(const FeatureNormalization&) const = default;
};

// Everything needed to reproduce inference for a trained model. The binary
// layout is documented in docs/checkpoint-format.md.
struct Checkpoint {
  ModelSpec spec;
  std::vector<LayerParams<float>> params;
  FeatureNormalization normalization;
  // Median training-split glyph arclength per class (pixels); 0 when unknown.
  std::array<double, 10> class_median_arclength{};
  std::uint64_t seed = 0;
  nlohmann::json metadata = nlohmann::json::object();

  bool operator==(const Checkpoint&) const = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint make_checkpoint(const Network<float>& network);
Network<float> make_network(const Checkpoint& checkpoint);

}  // namespace touchdigits::nn
