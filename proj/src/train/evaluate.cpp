#include "touchdigits/train/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "touchdigits/preprocess/features.hpp"
#include "touchdigits/util/error.hpp"
#include "touchdigits/util/log.hpp"

namespace touchdigits::train {
namespace {

nn::Shape batched(std::size_t n, const nn::Shape& sample) {
  nn::Shape s{n};
  s.insert(s.end(), sample.begin(), sample.end());
  return s;
}

}  // namespace

EncodedSet encode_set(std::span<const Glyph> glyphs, const nn::ModelSpec& spec,
                      const nn::FeatureNormalization& norm, bool allow_degenerate) {
  const std::size_t sample = nn::element_count(spec.input_shape);
  std::vector<float> values;
  values.reserve(glyphs.size() * sample);
  EncodedSet out;
  for (const auto& g : glyphs) {
    if (g.label < 0 || g.label > 9) {
      throw InvalidArgument("glyph " + std::to_string(g.id) + " has label " + std::to_string(g.label) +
                            " outside 0-9");
    }
    nn::Tensor<float> x;
    try {
      x = preprocess::encode_for_model(g, spec, norm, allow_degenerate);
    } catch (const InvalidArgument&) {
      if (allow_degenerate) throw;
      ++out.skipped;
      continue;
    }
    values.insert(values.end(), x.values().begin(), x.values().end());
    out.labels.push_back(g.label);
    out.ids.push_back(g.id);
  }
  if (out.skipped > 0) {
    log::warn(std::to_string(out.skipped) + " glyphs skipped: longest stroke has fewer than two distinct points");
  }
  if (!out.labels.empty()) out.inputs = nn::Tensor<float>(batched(out.labels.size(), spec.input_shape), std::move(values));
  return out;
}

nn::Tensor<float> predict_set(const nn::Network<float>& net, const nn::Tensor<float>& inputs) {
  const std::size_t n = inputs.rank() == 0 ? 0 : inputs.dim(0);
  const std::size_t classes = net.spec().class_count;
  if (n == 0) return {};
  const std::size_t sample = inputs.size() / n;
  nn::Tensor<float> out({n, classes});
  const nn::Shape sample_shape(inputs.shape().begin() + 1, inputs.shape().end());
  for (std::size_t start = 0; start < n; start += kEvalBatch) {
    const std::size_t b = std::min(kEvalBatch, n - start);
    std::vector<float> chunk(inputs.data() + start * sample, inputs.data() + (start + b) * sample);
    const auto probs = net.predict(nn::Tensor<float>(batched(b, sample_shape), std::move(chunk)));
    std::memcpy(out.data() + start * classes, probs.data(), b * classes * sizeof(float));
  }
  return out;
}

Metrics compute_metrics(const nn::Tensor<float>& probabilities, std::span<const int> labels) {
  Metrics m;
  m.count = labels.size();
  if (m.count == 0) return m;
  if (probabilities.size() != m.count * 10) throw ShapeError("probabilities do not match label count");
  m.probabilities.assign(probabilities.values().begin(), probabilities.values().end());
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < m.count; ++i) {
    const float* row = probabilities.data() + i * 10;
    const int pred = static_cast<int>(std::max_element(row, row + 10) - row);
    const int label = labels[i];
    if (label < 0 || label > 9) throw InvalidArgument("label " + std::to_string(label) + " outside 0-9");
    m.predictions.push_back(pred);
    ++m.confusion[static_cast<std::size_t>(label)][static_cast<std::size_t>(pred)];
    correct += pred == label ? 1 : 0;
    loss -= std::log(std::max(static_cast<double>(row[label]), 1e-12));
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(m.count);
  m.loss = loss / static_cast<double>(m.count);
  for (std::size_t c = 0; c < 10; ++c) {
    std::size_t predicted = 0;
    std::size_t actual = 0;
    for (std::size_t k = 0; k < 10; ++k) {
      predicted += m.confusion[k][c];
      actual += m.confusion[c][k];
    }
    m.precision[c] = predicted ? static_cast<double>(m.confusion[c][c]) / static_cast<double>(predicted) : 0.0;
    m.recall[c] = actual ? static_cast<double>(m.confusion[c][c]) / static_cast<double>(actual) : 0.0;
  }
  return m;
}

Metrics evaluate(const nn::Network<float>& net, const EncodedSet& set) {
  if (set.size() == 0) return {};
  return compute_metrics(predict_set(net, set.inputs), set.labels);
}

Metrics evaluate(const nn::Checkpoint& checkpoint, std::span<const Glyph> glyphs) {
  const auto net = nn::make_network(checkpoint);
  return evaluate(net, encode_set(glyphs, checkpoint.spec, checkpoint.normalization, true));
}

nlohmann::json to_json(const Metrics& metrics) {
  return {{"count", metrics.count},     {"accuracy", metrics.accuracy},
          {"loss", metrics.loss},       {"confusion", metrics.confusion},
          {"precision", metrics.precision}, {"recall", metrics.recall}};
}

}  // namespace touchdigits::train
