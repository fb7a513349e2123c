#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "touchdigits/nn/layers.hpp"
#include "touchdigits/nn/model_spec.hpp"

namespace touchdigits::nn {

// Intermediates cached by a forward pass and consumed by backward().
template <typename T>
struct ForwardTrace {
  std::vector<Tensor<T>> inputs;  // batched input of every layer
  std::vector<ops::ConvCache<T>> conv;
  std::vector<std::vector<std::uint32_t>> argmax;
  std::vector<Tensor<T>> masks;   // dropout multipliers; empty when inactive
  std::vector<Shape> output_shapes;  // unbatched output shape of every layer
  Tensor<T> probabilities;
  bool complete = false;
};

template <typename T>
using Gradients = std::vector<LayerParams<T>>;

// A feed-forward network whose final layer is softmax. Parameters are held
// by value; forward passes are const, so one instance can serve concurrent
// readers as long as nobody trains it at the same time.
template <typename T>
class Network {
 public:
  explicit Network(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  std::vector<LayerParams<T>>& params() { return params_; }
  const std::vector<LayerParams<T>>& params() const { return params_; }

  // Sum of the sizes of the allocated parameter tensors.
  std::size_t parameter_count() const;

  // Zero-mean uniform weights in +-sqrt(6 / (fan_in + fan_out)); zero biases.
  void initialize(std::uint64_t seed);

  // Class probabilities for a batch [B, ...input_shape]; dropout disabled.
  Tensor<T> predict(const Tensor<T>& batch) const;

  // Forward pass returning probabilities. `rng` is required in train mode
  // when the model contains dropout. `trace` may be null.
  Tensor<T> forward(const Tensor<T>& batch, Mode mode, Rng* rng,
                    ForwardTrace<T>* trace) const;

  // Gradients of the batch-mean cross-entropy w.r.t. every parameter.
  Gradients<T> backward(const ForwardTrace<T>& trace, std::span<const int> labels) const;

  Gradients<T> zero_gradients() const;

  template <typename U>
  Network<U> cast() const {
    Network<U> out(spec_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (params_[i].empty()) continue;
      out.params()[i].weights = params_[i].weights.template cast<U>();
      out.params()[i].biases = params_[i].biases.template cast<U>();
    }
    return out;
  }

 private:
  ModelSpec spec_;
  std::vector<Shape> input_shapes_;  // unbatched input shape of every layer
  std::vector<LayerParams<T>> params_;
};

// Batch-mean cross-entropy of probability rows against labels.
template <typename T>
double mean_cross_entropy(const Tensor<T>& probabilities, std::span<const int> labels);

}  // namespace touchdigits::nn
