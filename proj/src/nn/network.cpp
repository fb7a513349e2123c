#include "touchdigits/nn/network.hpp"

#include <cmath>
#include <limits>

namespace touchdigits::nn {

template <typename T>
Network<T>::Network(ModelSpec spec) : spec_(std::move(spec)) {
  if (spec_.layers.empty() || spec_.layers.back().kind != LayerKind::softmax) {
    throw InvalidArgument("model '" + spec_.name + "' must end with a softmax layer");
  }
  Shape current = spec_.input_shape;
  for (const auto& layer : spec_.layers) {
    input_shapes_.push_back(current);
    LayerParams<T> p;
    if (layer.has_parameters()) {
      p.weights = Tensor<T>(weight_shape(layer, current));
      p.biases = Tensor<T>({layer.feature_count});
    }
    params_.push_back(std::move(p));
    current = output_shape(layer, current);
  }
  if (current != Shape{spec_.class_count}) {
    throw ShapeError("model '" + spec_.name + "' produces " + to_string(current) +
                     ", expected " + std::to_string(spec_.class_count) + " classes");
  }
}

template <typename T>
std::size_t Network<T>::parameter_count() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += p.size();
  return total;
}

template <typename T>
void Network<T>::initialize(std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (p.empty()) continue;
    const auto& layer = spec_.layers[i];
    const std::size_t in_features = input_shapes_[i].back();
    std::size_t fan_in = 0;
    std::size_t fan_out = 0;
    switch (layer.kind) {
      case LayerKind::conv2d:
        fan_in = layer.kernel_h * layer.kernel_w * in_features;
        fan_out = layer.kernel_h * layer.kernel_w * layer.feature_count;
        break;
      case LayerKind::conv1d:
        fan_in = layer.kernel_w * in_features;
        fan_out = layer.kernel_w * layer.feature_count;
        break;
      default:
        fan_in = p.weights.dim(0);
        fan_out = p.weights.dim(1);
        break;
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> uniform(-limit, limit);
    for (auto& w : p.weights.values()) w = static_cast<T>(uniform(rng));
    p.biases.fill(T{0});
  }
}

template <typename T>
Tensor<T> Network<T>::predict(const Tensor<T>& batch) const {
  return forward(batch, Mode::infer, nullptr, nullptr);
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& batch, Mode mode, Rng* rng,
                              ForwardTrace<T>* trace) const {
  const Shape& in_shape = batch.shape();
  if (in_shape.size() != spec_.input_shape.size() + 1 ||
      !std::equal(spec_.input_shape.begin(), spec_.input_shape.end(), in_shape.begin() + 1)) {
    throw ShapeError("model '" + spec_.name + "' expects batches of " +
                     to_string(spec_.input_shape) + ", got " + to_string(in_shape));
  }
  const std::size_t batch_size = in_shape[0];
  const std::size_t n = spec_.layers.size();
  if (trace) {
    *trace = ForwardTrace<T>{};
    trace->inputs.resize(n);
    trace->conv.resize(n);
    trace->argmax.resize(n);
    trace->masks.resize(n);
  }

  Tensor<T> x = batch;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& layer = spec_.layers[i];
    if (trace) trace->inputs[i] = x;
    switch (layer.kind) {
      case LayerKind::conv2d:
      case LayerKind::conv1d:
        x = ops::conv_forward(x, params_[i], layer, trace ? &trace->conv[i] : nullptr);
        break;
      case LayerKind::maxpool2d:
      case LayerKind::maxpool1d:
        x = ops::maxpool_forward(x, layer, trace ? &trace->argmax[i] : nullptr);
        break;
      case LayerKind::dense:
        x = ops::dense_forward(x, params_[i]);
        break;
      case LayerKind::relu:
        for (auto& v : x.values()) v = std::max(v, T{0});
        break;
      case LayerKind::dropout:
        if (mode == Mode::train && layer.dropout_rate > 0.0) {
          if (!rng) throw InvalidArgument("train-mode dropout requires an rng");
          std::bernoulli_distribution keep(1.0 - layer.dropout_rate);
          const T scale = static_cast<T>(1.0 / (1.0 - layer.dropout_rate));
          Tensor<T> mask(x.shape());
          for (std::size_t k = 0; k < x.size(); ++k) {
            mask[k] = keep(*rng) ? scale : T{0};
            x[k] *= mask[k];
          }
          if (trace) trace->masks[i] = std::move(mask);
        }
        break;
      case LayerKind::flatten:
        x.reshape({batch_size, x.size() / batch_size});
        break;
      case LayerKind::softmax:
        x = ops::softmax_rows(x);
        break;
    }
    if (trace) trace->output_shapes.emplace_back(x.shape().begin() + 1, x.shape().end());
  }
  if (trace) {
    trace->probabilities = x;
    trace->complete = true;
  }
  return x;
}

template <typename T>
Gradients<T> Network<T>::zero_gradients() const {
  Gradients<T> grads;
  grads.reserve(params_.size());
  for (const auto& p : params_) {
    LayerParams<T> g;
    if (!p.empty()) {
      g.weights = Tensor<T>(p.weights.shape());
      g.biases = Tensor<T>(p.biases.shape());
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

template <typename T>
Gradients<T> Network<T>::backward(const ForwardTrace<T>& trace,
                                  std::span<const int> labels) const {
  if (!trace.complete || trace.inputs.size() != spec_.layers.size()) {
    throw InvalidArgument("backward called without a completed forward pass");
  }
  const Tensor<T>& probs = trace.probabilities;
  const std::size_t batch = probs.dim(0);
  const std::size_t classes = spec_.class_count;
  if (labels.size() != batch) {
    throw InvalidArgument("got " + std::to_string(labels.size()) + " labels for a batch of " +
                          std::to_string(batch));
  }

  // Softmax and cross-entropy combine to (p - onehot) / B at the logits.
  Tensor<T> grad = probs;
  const T inv_batch = static_cast<T>(1.0 / static_cast<double>(batch));
  for (std::size_t b = 0; b < batch; ++b) {
    const int label = labels[b];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw InvalidArgument("label " + std::to_string(label) + " outside [0, " +
                            std::to_string(classes - 1) + "]");
    }
    grad[b * classes + static_cast<std::size_t>(label)] -= T{1};
  }
  for (auto& v : grad.values()) v *= inv_batch;

  Gradients<T> grads = zero_gradients();
  for (std::size_t i = spec_.layers.size() - 1; i-- > 0;) {
    const auto& layer = spec_.layers[i];
    const Tensor<T>& input = trace.inputs[i];
    const bool need_input_grad = i > 0;
    switch (layer.kind) {
      case LayerKind::conv2d:
      case LayerKind::conv1d:
        grad = ops::conv_backward(grad, params_[i], layer, trace.conv[i], grads[i],
                                  need_input_grad);
        break;
      case LayerKind::maxpool2d:
      case LayerKind::maxpool1d:
        grad = ops::maxpool_backward(grad, input.shape(), trace.argmax[i]);
        break;
      case LayerKind::dense:
        grad = ops::dense_backward(grad, input, params_[i], grads[i], need_input_grad);
        break;
      case LayerKind::relu:
        for (std::size_t k = 0; k < grad.size(); ++k) {
          if (!(input[k] > T{0})) grad[k] = T{0};
        }
        break;
      case LayerKind::dropout:
        if (!trace.masks[i].empty()) {
          for (std::size_t k = 0; k < grad.size(); ++k) grad[k] *= trace.masks[i][k];
        }
        break;
      case LayerKind::flatten:
        grad.reshape(input.shape());
        break;
      case LayerKind::softmax:
        throw InvalidArgument("softmax is only supported as the final layer");
    }
    if (!need_input_grad) break;
  }
  return grads;
}

template <typename T>
double mean_cross_entropy(const Tensor<T>& probabilities, std::span<const int> labels) {
  const std::size_t batch = probabilities.dim(0);
  const std::size_t classes = probabilities.size() / batch;
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const int label = labels[b];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw InvalidArgument("label " + std::to_string(label) + " out of range");
    }
    const double p = probabilities[b * classes + static_cast<std::size_t>(label)];
    total -= std::log(std::max(p, static_cast<double>(std::numeric_limits<T>::min())));
  }
  return total / static_cast<double>(batch);
}

template class Network<float>;
template class Network<double>;
template double mean_cross_entropy(const Tensor<float>&, std::span<const int>);
template double mean_cross_entropy(const Tensor<double>&, std::span<const int>);

}  // namespace touchdigits::nn
