#include "touchdigits/models/models.hpp"

#include <iomanip>
#include <sstream>

#include "touchdigits/nn/network.hpp"
#include "touchdigits/preprocess/polar.hpp"
#include "touchdigits/preprocess/raster.hpp"
#include "touchdigits/util/error.hpp"

namespace touchdigits::models {
namespace {

using nn::LayerKind;
using nn::LayerSpec;
using nn::Padding;

const std::vector<ReferenceRow>& bitmap_reference() {
  static const std::vector<ReferenceRow> rows{
      {LayerKind::conv2d, "28x28", 32, 832},
      {LayerKind::maxpool2d, "14x14", std::nullopt, 0},
      {LayerKind::conv2d, "14x14", 64, 51264},
      {LayerKind::maxpool2d, "7x7", std::nullopt, 0},
      {LayerKind::dense, "512", std::nullopt, 1606144},
      {LayerKind::dropout, "512", std::nullopt, 0},
      {LayerKind::dense, "10", std::nullopt, 5130},
  };
  return rows;
}

std::vector<ReferenceRow> polar_reference(std::size_t first_conv_params) {
  return {
      {LayerKind::conv1d, "126", 32, first_conv_params},
      {LayerKind::dropout, "126", std::nullopt, 0},
      {LayerKind::conv1d, "122", 32, 5152},
      {LayerKind::maxpool1d, "61", std::nullopt, 0},
      {LayerKind::dropout, "61", std::nullopt, 0},
      {LayerKind::conv1d, "57", 64, 10304},
      {LayerKind::maxpool1d, "28", std::nullopt, 0},
      {LayerKind::dropout, "28", std::nullopt, 0},
      {LayerKind::conv1d, "28", 128, 41088},
      {LayerKind::maxpool1d, "14", std::nullopt, 0},
      {LayerKind::dropout, "14", std::nullopt, 0},
      {LayerKind::flatten, "1792", std::nullopt, 0},
      {LayerKind::dense, "128", std::nullopt, 229504},
      {LayerKind::dropout, "128", std::nullopt, 0},
      {LayerKind::dense, "10", std::nullopt, 1290},
  };
}

// Two input channels give 352 first-layer parameters; a single channel
// gives 5*1*32 + 32 = 192, which is what makes the single-input totals
// 160 smaller.
const std::vector<ReferenceRow>& polar_two_channel_reference() {
  static const std::vector<ReferenceRow> rows = polar_reference(352);
  return rows;
}

const std::vector<ReferenceRow>& polar_one_channel_reference() {
  static const std::vector<ReferenceRow> rows = polar_reference(192);
  return rows;
}

bool tabulated(LayerKind kind, const std::vector<ReferenceRow>& reference) {
  if (kind == LayerKind::relu || kind == LayerKind::softmax) return false;
  if (kind == LayerKind::flatten) {
    for (const auto& r : reference) {
      if (r.kind == LayerKind::flatten) return true;
    }
    return false;
  }
  return true;
}

bool is_conv(LayerKind kind) { return kind == LayerKind::conv1d || kind == LayerKind::conv2d; }

std::string size_label(const nn::Shape& shape) {
  if (shape.size() == 3) return std::to_string(shape[0]) + "x" + std::to_string(shape[1]);
  return std::to_string(shape[0]);
}

std::string optional_count(const std::optional<std::size_t>& v) {
  return v ? std::to_string(*v) : "-";
}

}  // namespace

nn::ModelSpec build_bitmap_model() {
  nn::ModelSpec spec;
  spec.name = "bitmap2d";
  spec.input_mode = "bitmap";
  spec.input_shape = {preprocess::kBitmapSide, preprocess::kBitmapSide, 1};
  spec.layers = {
      LayerSpec::conv2d(5, 32, Padding::same),
      LayerSpec::relu(),
      LayerSpec::maxpool2d(2),
      LayerSpec::conv2d(5, 64, Padding::same),
      LayerSpec::relu(),
      LayerSpec::maxpool2d(2),
      LayerSpec::flatten(),
      LayerSpec::dense(512),
      LayerSpec::relu(),
      LayerSpec::dropout(0.5),
      LayerSpec::dense(10),
      LayerSpec::softmax(),
  };
  return spec;
}

nn::ModelSpec build_polar_model(preprocess::PolarInput input) {
  nn::ModelSpec spec;
  spec.name = "polar1d";
  spec.input_mode = preprocess::to_string(input);
  spec.input_shape = {preprocess::kPolarLength, preprocess::channel_count(input)};
  spec.layers = {
      LayerSpec::conv1d(5, 32, Padding::valid),
      LayerSpec::relu(),
      LayerSpec::dropout(0.25),
      LayerSpec::conv1d(5, 32, Padding::valid),
      LayerSpec::relu(),
      LayerSpec::maxpool1d(2),
      LayerSpec::dropout(0.25),
      LayerSpec::conv1d(5, 64, Padding::valid),
      LayerSpec::relu(),
      LayerSpec::maxpool1d(2),
      LayerSpec::dropout(0.25),
      LayerSpec::conv1d(5, 128, Padding::same),
      LayerSpec::relu(),
      LayerSpec::maxpool1d(2),
      LayerSpec::dropout(0.25),
      LayerSpec::flatten(),
      LayerSpec::dense(128),
      LayerSpec::relu(),
      LayerSpec::dropout(0.25),
      LayerSpec::dense(10),
      LayerSpec::softmax(),
  };
  return spec;
}

nn::ModelSpec build_model(const std::string& name, const std::string& input_mode) {
  if (name == "bitmap2d" || name == "bitmap") return build_bitmap_model();
  if (name == "polar1d" || name == "polar") {
    return build_polar_model(preprocess::parse_polar_input(input_mode));
  }
  throw InvalidArgument("unknown model '" + name + "' (bitmap2d|polar1d)");
}

const std::vector<ReferenceRow>& reference_table(const nn::ModelSpec& spec) {
  if (spec.name == "bitmap2d") return bitmap_reference();
  if (spec.name == "polar1d") {
    return preprocess::parse_polar_input(spec.input_mode) == preprocess::PolarInput::both
               ? polar_two_channel_reference()
               : polar_one_channel_reference();
  }
  throw InvalidArgument("no reference table for model '" + spec.name + "'");
}

AuditReport audit(const nn::ModelSpec& spec) {
  const auto& reference = reference_table(spec);
  AuditReport report;
  for (const auto& r : reference) report.expected_total += r.parameters;

  nn::Network<float> net(spec);
  nn::Shape batch_shape{1};
  batch_shape.insert(batch_shape.end(), spec.input_shape.begin(), spec.input_shape.end());
  nn::ForwardTrace<float> trace;
  net.forward(nn::Tensor<float>(batch_shape), nn::Mode::infer, nullptr, &trace);

  std::size_t row_index = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto kind = spec.layers[i].kind;
    const auto& params = net.params()[i];
    const std::size_t allocated = params.empty() ? 0 : params.weights.size() + params.biases.size();
    report.total_parameters += allocated;
    if (!tabulated(kind, reference)) continue;

    AuditRow row;
    row.layer = ++row_index;
    row.kind = kind;
    row.output_size = size_label(trace.output_shapes[i]);
    if (is_conv(kind)) row.features = trace.output_shapes[i].back();
    row.parameters = allocated;
    if (row_index <= reference.size()) {
      const ReferenceRow& want = reference[row_index - 1];
      row.expected = want;
      if (want.kind != kind) {
        row.mismatches.push_back("kind expected " + nn::to_string(want.kind) + ", got " + nn::to_string(kind));
      }
      if (want.parameters != row.parameters) {
        row.mismatches.push_back("parameters expected " + std::to_string(want.parameters) + ", got " +
                                 std::to_string(row.parameters));
      }
      if (want.output_size != row.output_size) {
        row.mismatches.push_back("output size expected " + want.output_size + ", got " + row.output_size);
      }
      if (want.features != row.features) {
        row.mismatches.push_back("features expected " + optional_count(want.features) + ", got " +
                                 optional_count(row.features));
      }
    } else {
      row.mismatches.push_back("layer not present in the reference table");
    }
    report.rows.push_back(std::move(row));
  }
  for (const auto& row : report.rows) {
    if (!row.mismatches.empty() && report.failure.empty()) {
      report.failure = "layer " + std::to_string(row.layer) + " (" + nn::to_string(row.kind) + "): ";
      for (std::size_t k = 0; k < row.mismatches.size(); ++k) {
        report.failure += (k ? "; " : "") + row.mismatches[k];
      }
    }
  }
  if (report.failure.empty() && row_index < reference.size()) {
    report.failure = "reference lists " + std::to_string(reference.size()) + " layers, model has " +
                     std::to_string(row_index);
  }
  if (report.failure.empty() && report.total_parameters != report.expected_total) {
    report.failure = "total parameters expected " + std::to_string(report.expected_total) + ", got " +
                     std::to_string(report.total_parameters);
  }
  report.passed = report.failure.empty();
  return report;
}

nlohmann::json to_json(const AuditReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json row{{"layer", r.layer},
                       {"kind", nn::to_string(r.kind)},
                       {"output_size", r.output_size},
                       {"parameters", r.parameters},
                       {"mismatches", r.mismatches}};
    row["features"] = r.features ? nlohmann::json(*r.features) : nlohmann::json(nullptr);
    if (r.expected) {
      row["expected"] = {{"output_size", r.expected->output_size},
                         {"parameters", r.expected->parameters},
                         {"features", r.expected->features ? nlohmann::json(*r.expected->features)
                                                           : nlohmann::json(nullptr)}};
    }
    rows.push_back(std::move(row));
  }
  return {{"passed", report.passed},
          {"total_parameters", report.total_parameters},
          {"expected_total", report.expected_total},
          {"failure", report.failure},
          {"layers", rows}};
}

std::string format_report(const AuditReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(4) << "#" << std::setw(11) << "layer" << std::setw(9) << "output"
      << std::setw(6) << "F#" << std::setw(10) << "P#" << "check\n";
  for (const auto& r : report.rows) {
    out << std::setw(4) << r.layer << std::setw(11) << nn::to_string(r.kind) << std::setw(9) << r.output_size
        << std::setw(6) << optional_count(r.features) << std::setw(10) << r.parameters
        << (r.mismatches.empty() ? "ok" : "MISMATCH") << "\n";
  }
  out << "total parameters " << report.total_parameters << " (expected " << report.expected_total << ")\n";
  out << (report.passed ? "audit passed" : "audit failed: " + report.failure) << "\n";
  return out.str();
}

}  // namespace touchdigits::models
