#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "touchdigits/nn/model_spec.hpp"
#include "touchdigits/preprocess/features.hpp"

namespace touchdigits::models {

// 2D bitmap classifier over [28, 28, 1].
nn::ModelSpec build_bitmap_model();

// 1D polar-vector classifier over [130, C], C = 1 or 2 by input mode.
nn::ModelSpec build_polar_model(preprocess::PolarInput input);

// "bitmap2d" (mode ignored) or "polar1d" with angle/distance/both.
nn::ModelSpec build_model(const std::string& name, const std::string& input_mode = "both");

// One row of the reference layer tables.
struct ReferenceRow {
  nn::LayerKind kind;
  std::string output_size;  // "28x28" or "126"
  std::optional<std::size_t> features;
  std::size_t parameters = 0;
};

// Reference rows for the model's name and input mode. Activation and
// softmax layers are not tabulated.
const std::vector<ReferenceRow>& reference_table(const nn::ModelSpec& spec);

struct AuditRow {
  std::size_t layer = 0;  // 1-based position among tabulated layers
  nn::LayerKind kind;
  std::string output_size;
  std::optional<std::size_t> features;
  std::size_t parameters = 0;
  std::optional<ReferenceRow> expected;
  std::vector<std::string> mismatches;
};

struct AuditReport {
  bool passed = true;
  std::vector<AuditRow> rows;
  std::size_t total_parameters = 0;
  std::size_t expected_total = 0;
  std::string failure;  // first failing layer, empty when passed
};

// Builds the network, runs a forward pass on a zero input and compares the
// observed output sizes, feature counts and allocated parameter counts with
// the reference table.
AuditReport audit(const nn::ModelSpec& spec);

nlohmann::json to_json(const AuditReport& report);
// Fixed-width table for terminals.
std::string format_report(const AuditReport& report);

}  // namespace touchdigits::models
