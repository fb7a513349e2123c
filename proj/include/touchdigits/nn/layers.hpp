#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "touchdigits/nn/model_spec.hpp"
#include "touchdigits/nn/tensor.hpp"

namespace touchdigits::nn {

// Trainable state of one layer. Convolution weights are laid out
// [kernel_h, kernel_w, in_features, out_features] (2D) or
// [kernel, in_features, out_features] (1D); dense weights are [in, out].
template <typename T>
struct LayerParams {
  Tensor<T> weights;
  Tensor<T> biases;

  bool empty() const { return weights.empty(); }
  std::size_t size() const { return weights.size() + biases.size(); }
  bool operator==(const LayerParams&) const = default;
};

enum class Mode { train, infer };

using Rng = std::mt19937_64;

// Shape of the weight tensor for `layer` given its (unbatched) input shape.
Shape weight_shape(const LayerSpec& layer, const Shape& input);

// ---------------------------------------------------------------------------
// Single-sample operations. Inputs carry no batch dimension.

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const LayerParams<T>& params,
                         const LayerSpec& spec);
template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& input, const LayerParams<T>& params,
                         const LayerSpec& spec);
// Works on [L, C] and [H, W, C]; non-overlapping windows, remainder dropped.
template <typename T>
Tensor<T> maxpool_forward(const Tensor<T>& input, std::size_t window);
template <typename T>
Tensor<T> dense_forward(const Tensor<T>& input, const LayerParams<T>& params);
template <typename T>
Tensor<T> relu(const Tensor<T>& input);
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);
// -log(probs[label]); label must be a valid class index.
template <typename T>
double cross_entropy(const Tensor<T>& probs, int label);
// Inverted dropout: survivors are scaled by 1/(1-rate); infer mode is identity.
template <typename T>
Tensor<T> dropout_apply(const Tensor<T>& input, double rate, Mode mode, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Batched kernels used by Network. The leading dimension is the batch.
namespace ops {

template <typename T>
struct ConvCache {
  Tensor<T> columns;  // im2col matrix [batch * out_positions, kernel_elems * in_features]
  Shape input_shape;
};

template <typename T>
Tensor<T> conv_forward(const Tensor<T>& input, const LayerParams<T>& params,
                       const LayerSpec& spec, ConvCache<T>* cache);
// Accumulates into `grads`; returns the input gradient when `need_input_grad`.
template <typename T>
Tensor<T> conv_backward(const Tensor<T>& grad_output, const LayerParams<T>& params,
                        const LayerSpec& spec, const ConvCache<T>& cache,
                        LayerParams<T>& grads, bool need_input_grad);

template <typename T>
Tensor<T> maxpool_forward(const Tensor<T>& input, const LayerSpec& spec,
                          std::vector<std::uint32_t>* argmax);
template <typename T>
Tensor<T> maxpool_backward(const Tensor<T>& grad_output, const Shape& input_shape,
                           const std::vector<std::uint32_t>& argmax);

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& input, const LayerParams<T>& params);
template <typename T>
Tensor<T> dense_backward(const Tensor<T>& grad_output, const Tensor<T>& input,
                         const LayerParams<T>& params, LayerParams<T>& grads,
                         bool need_input_grad);

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& logits);

}  // namespace ops
}  // namespace touchdigits::nn
