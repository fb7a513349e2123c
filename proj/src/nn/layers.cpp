#include "touchdigits/nn/layers.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

namespace touchdigits::nn {

template <typename T>
bool all_finite(const Tensor<T>& t) {
  return std::all_of(t.values().begin(), t.values().end(),
                     [](T v) { return std::isfinite(v); });
}
template bool all_finite(const Tensor<float>&);
template bool all_finite(const Tensor<double>&);

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;
template <typename T>
using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;

// Spatial geometry of a convolution over [H, W, C] (1D inputs use H = 1).
struct ConvGeometry {
  std::size_t batch, in_h, in_w, in_c;
  std::size_t kernel_h, kernel_w, stride;
  std::size_t out_h, out_w, out_c;
  std::size_t pad_top, pad_left;

  std::size_t kernel_elems() const { return kernel_h * kernel_w * in_c; }
  std::size_t positions() const { return out_h * out_w; }
};

std::size_t same_padding_before(std::size_t in, std::size_t out, std::size_t kernel,
                                std::size_t stride) {
  const std::size_t needed = (out - 1) * stride + kernel;
  return needed > in ? (needed - in) / 2 : 0;
}

template <typename T>
ConvGeometry conv_geometry(const Shape& batched, const LayerParams<T>& params,
                           const LayerSpec& spec) {
  const bool is_1d = spec.kind == LayerKind::conv1d;
  if (spec.kind != LayerKind::conv1d && spec.kind != LayerKind::conv2d) {
    throw InvalidArgument("conv kernel called for " + to_string(spec.kind));
  }
  const std::size_t rank = is_1d ? 3 : 4;
  if (batched.size() != rank) {
    throw ShapeError(to_string(spec.kind) + " expects batched rank-" + std::to_string(rank) +
                     " input, got " + to_string(batched));
  }
  const Shape sample(batched.begin() + 1, batched.end());
  const Shape expected_weights = weight_shape(spec, sample);
  if (params.weights.shape() != expected_weights) {
    throw ShapeError(to_string(spec.kind) + " input " + to_string(sample) +
                     " does not match kernel " + to_string(params.weights.shape()));
  }
  if (params.biases.size() != spec.feature_count) {
    throw ShapeError(to_string(spec.kind) + " bias " + to_string(params.biases.shape()) +
                     " does not match feature count " + std::to_string(spec.feature_count));
  }
  const Shape out = output_shape(spec, sample);

  ConvGeometry g{};
  g.batch = batched[0];
  g.in_h = is_1d ? 1 : sample[0];
  g.in_w = is_1d ? sample[0] : sample[1];
  g.in_c = sample.back();
  g.kernel_h = is_1d ? 1 : spec.kernel_h;
  g.kernel_w = spec.kernel_w;
  g.stride = spec.stride;
  g.out_h = is_1d ? 1 : out[0];
  g.out_w = is_1d ? out[0] : out[1];
  g.out_c = spec.feature_count;
  if (spec.padding == Padding::same) {
    g.pad_top = is_1d ? 0 : same_padding_before(g.in_h, g.out_h, g.kernel_h, g.stride);
    g.pad_left = same_padding_before(g.in_w, g.out_w, g.kernel_w, g.stride);
  }
  return g;
}

template <typename T>
void im2col(const T* input, const ConvGeometry& g, T* columns) {
  const std::size_t k = g.kernel_elems();
  const std::size_t row_span = g.kernel_w * g.in_c;
  for (std::size_t b = 0; b < g.batch; ++b) {
    const T* image = input + b * g.in_h * g.in_w * g.in_c;
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
      for (std::size_t ox = 0; ox < g.out_w; ++ox) {
        T* row = columns + ((b * g.out_h + oy) * g.out_w + ox) * k;
        for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
          T* dst = row + ky * row_span;
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                          static_cast<std::ptrdiff_t>(g.pad_top);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) {
            std::fill(dst, dst + row_span, T{0});
            continue;
          }
          for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                            static_cast<std::ptrdiff_t>(g.pad_left);
            T* cell = dst + kx * g.in_c;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) {
              std::fill(cell, cell + g.in_c, T{0});
            } else {
              const T* src = image + (static_cast<std::size_t>(iy) * g.in_w +
                                      static_cast<std::size_t>(ix)) * g.in_c;
              std::copy(src, src + g.in_c, cell);
            }
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* columns, const ConvGeometry& g, T* input_grad) {
  const std::size_t k = g.kernel_elems();
  const std::size_t row_span = g.kernel_w * g.in_c;
  for (std::size_t b = 0; b < g.batch; ++b) {
    T* image = input_grad + b * g.in_h * g.in_w * g.in_c;
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
      for (std::size_t ox = 0; ox < g.out_w; ++ox) {
        const T* row = columns + ((b * g.out_h + oy) * g.out_w + ox) * k;
        for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                          static_cast<std::ptrdiff_t>(g.pad_top);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
          for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                            static_cast<std::ptrdiff_t>(g.pad_left);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
            const T* src = row + ky * row_span + kx * g.in_c;
            T* dst = image + (static_cast<std::size_t>(iy) * g.in_w +
                              static_cast<std::size_t>(ix)) * g.in_c;
            for (std::size_t c = 0; c < g.in_c; ++c) dst[c] += src[c];
          }
        }
      }
    }
  }
}

template <typename T>
Tensor<T> with_batch(const Tensor<T>& sample) {
  Shape shape{1};
  shape.insert(shape.end(), sample.shape().begin(), sample.shape().end());
  return sample.reshaped(std::move(shape));
}

template <typename T>
Tensor<T> without_batch(Tensor<T> batched) {
  Shape shape(batched.shape().begin() + 1, batched.shape().end());
  batched.reshape(std::move(shape));
  return batched;
}

}  // namespace

Shape weight_shape(const LayerSpec& layer, const Shape& input) {
  switch (layer.kind) {
    case LayerKind::conv2d:
      return {layer.kernel_h, layer.kernel_w, input.back(), layer.feature_count};
    case LayerKind::conv1d:
      return {layer.kernel_w, input.back(), layer.feature_count};
    case LayerKind::dense:
      return {element_count(input), layer.feature_count};
    default:
      return {};
  }
}

namespace ops {

template <typename T>
Tensor<T> conv_forward(const Tensor<T>& input, const LayerParams<T>& params,
                       const LayerSpec& spec, ConvCache<T>* cache) {
  const ConvGeometry g = conv_geometry(input.shape(), params, spec);
  const std::size_t rows = g.batch * g.positions();
  const std::size_t k = g.kernel_elems();

  Tensor<T> local;
  Tensor<T>& columns = cache ? cache->columns : local;
  columns = Tensor<T>({rows, k});
  im2col(input.data(), g, columns.data());

  Shape out_shape = spec.kind == LayerKind::conv1d
                        ? Shape{g.batch, g.out_w, g.out_c}
                        : Shape{g.batch, g.out_h, g.out_w, g.out_c};
  Tensor<T> output(out_shape);
  MatrixMap<T> y(output.data(), rows, g.out_c);
  ConstMatrixMap<T> x(columns.data(), rows, k);
  ConstMatrixMap<T> w(params.weights.data(), k, g.out_c);
  Eigen::Map<const RowVector<T>> bias(params.biases.data(), g.out_c);
  y.noalias() = x * w;
  y.rowwise() += bias;

  if (cache) cache->input_shape = input.shape();
  return output;
}

template <typename T>
Tensor<T> conv_backward(const Tensor<T>& grad_output, const LayerParams<T>& params,
                        const LayerSpec& spec, const ConvCache<T>& cache,
                        LayerParams<T>& grads, bool need_input_grad) {
  const ConvGeometry g = conv_geometry(cache.input_shape, params, spec);
  const std::size_t rows = g.batch * g.positions();
  const std::size_t k = g.kernel_elems();
  if (grad_output.size() != rows * g.out_c) {
    throw ShapeError("conv gradient " + to_string(grad_output.shape()) +
                     " does not match forward output");
  }
  ConstMatrixMap<T> dy(grad_output.data(), rows, g.out_c);
  ConstMatrixMap<T> x(cache.columns.data(), rows, k);
  MatrixMap<T> dw(grads.weights.data(), k, g.out_c);
  Eigen::Map<RowVector<T>> db(grads.biases.data(), g.out_c);
  dw.noalias() += x.transpose() * dy;
  db += dy.colwise().sum();

  if (!need_input_grad) return {};
  ConstMatrixMap<T> w(params.weights.data(), k, g.out_c);
  RowMatrix<T> dcols = dy * w.transpose();
  Tensor<T> input_grad(cache.input_shape);
  col2im_add(dcols.data(), g, input_grad.data());
  return input_grad;
}

template <typename T>
Tensor<T> maxpool_forward(const Tensor<T>& input, const LayerSpec& spec,
                          std::vector<std::uint32_t>* argmax) {
  const bool is_1d = spec.kind == LayerKind::maxpool1d;
  const Shape sample(input.shape().begin() + 1, input.shape().end());
  const Shape out = output_shape(spec, sample);
  const std::size_t batch = input.dim(0);
  const std::size_t in_h = is_1d ? 1 : sample[0];
  const std::size_t in_w = is_1d ? sample[0] : sample[1];
  const std::size_t c = sample.back();
  const std::size_t wh = is_1d ? 1 : spec.kernel_h;
  const std::size_t ww = spec.kernel_w;
  const std::size_t out_h = is_1d ? 1 : out[0];
  const std::size_t out_w = is_1d ? out[0] : out[1];

  Shape out_shape{batch};
  out_shape.insert(out_shape.end(), out.begin(), out.end());
  Tensor<T> output(out_shape);
  if (argmax) argmax->assign(output.size(), 0);

  std::size_t o = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t base = b * in_h * in_w * c;
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        for (std::size_t ch = 0; ch < c; ++ch, ++o) {
          T best = -std::numeric_limits<T>::infinity();
          std::size_t best_index = 0;
          for (std::size_t ky = 0; ky < wh; ++ky) {
            for (std::size_t kx = 0; kx < ww; ++kx) {
              const std::size_t idx =
                  base + ((oy * wh + ky) * in_w + (ox * ww + kx)) * c + ch;
              if (input[idx] > best) {
                best = input[idx];
                best_index = idx;
              }
            }
          }
          output[o] = best;
          if (argmax) (*argmax)[o] = static_cast<std::uint32_t>(best_index);
        }
      }
    }
  }
  return output;
}

template <typename T>
Tensor<T> maxpool_backward(const Tensor<T>& grad_output, const Shape& input_shape,
                           const std::vector<std::uint32_t>& argmax) {
  if (argmax.size() != grad_output.size()) {
    throw ShapeError("maxpool gradient does not match forward output");
  }
  Tensor<T> grad(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) grad[argmax[i]] += grad_output[i];
  return grad;
}

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& input, const LayerParams<T>& params) {
  const std::size_t batch = input.dim(0);
  const std::size_t in = input.size() / batch;
  if (params.weights.rank() != 2 || params.weights.dim(0) != in) {
    throw ShapeError("dense input " + to_string(Shape(input.shape().begin() + 1,
                                                      input.shape().end())) +
                     " does not match weights " + to_string(params.weights.shape()));
  }
  const std::size_t out = params.weights.dim(1);
  Tensor<T> output({batch, out});
  MatrixMap<T> y(output.data(), batch, out);
  ConstMatrixMap<T> x(input.data(), batch, in);
  ConstMatrixMap<T> w(params.weights.data(), in, out);
  Eigen::Map<const RowVector<T>> bias(params.biases.data(), out);
  y.noalias() = x * w;
  y.rowwise() += bias;
  return output;
}

template <typename T>
Tensor<T> dense_backward(const Tensor<T>& grad_output, const Tensor<T>& input,
                         const LayerParams<T>& params, LayerParams<T>& grads,
                         bool need_input_grad) {
  const std::size_t batch = input.dim(0);
  const std::size_t in = input.size() / batch;
  const std::size_t out = params.weights.dim(1);
  ConstMatrixMap<T> dy(grad_output.data(), batch, out);
  ConstMatrixMap<T> x(input.data(), batch, in);
  MatrixMap<T> dw(grads.weights.data(), in, out);
  Eigen::Map<RowVector<T>> db(grads.biases.data(), out);
  dw.noalias() += x.transpose() * dy;
  db += dy.colwise().sum();
  if (!need_input_grad) return {};
  Tensor<T> input_grad(input.shape());
  ConstMatrixMap<T> w(params.weights.data(), in, out);
  MatrixMap<T> dx(input_grad.data(), batch, in);
  dx.noalias() = dy * w.transpose();
  return input_grad;
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& logits) {
  const std::size_t batch = logits.dim(0);
  const std::size_t classes = logits.size() / batch;
  Tensor<T> probs(logits.shape());
  for (std::size_t b = 0; b < batch; ++b) {
    const T* z = logits.data() + b * classes;
    T* p = probs.data() + b * classes;
    const T top = *std::max_element(z, z + classes);
    double sum = 0.0;
    for (std::size_t i = 0; i < classes; ++i) sum += std::exp(static_cast<double>(z[i] - top));
    for (std::size_t i = 0; i < classes; ++i) {
      p[i] = static_cast<T>(std::exp(static_cast<double>(z[i] - top)) / sum);
    }
  }
  return probs;
}

#define TOUCHDIGITS_INSTANTIATE_OPS(T)                                                    \
  template Tensor<T> conv_forward(const Tensor<T>&, const LayerParams<T>&,              \
                                  const LayerSpec&, ConvCache<T>*);                      \
  template Tensor<T> conv_backward(const Tensor<T>&, const LayerParams<T>&,             \
                                   const LayerSpec&, const ConvCache<T>&,               \
                                   LayerParams<T>&, bool);                               \
  template Tensor<T> maxpool_forward(const Tensor<T>&, const LayerSpec&,                 \
                                     std::vector<std::uint32_t>*);                       \
  template Tensor<T> maxpool_backward(const Tensor<T>&, const Shape&,                    \
                                      const std::vector<std::uint32_t>&);                \
  template Tensor<T> dense_forward(const Tensor<T>&, const LayerParams<T>&);             \
  template Tensor<T> dense_backward(const Tensor<T>&, const Tensor<T>&,                  \
                                    const LayerParams<T>&, LayerParams<T>&, bool);       \
  template Tensor<T> softmax_rows(const Tensor<T>&);

TOUCHDIGITS_INSTANTIATE_OPS(float)
TOUCHDIGITS_INSTANTIATE_OPS(double)
#undef TOUCHDIGITS_INSTANTIATE_OPS

}  // namespace ops

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const LayerParams<T>& params,
                         const LayerSpec& spec) {
  if (spec.kind != LayerKind::conv2d) throw InvalidArgument("layer is not conv2d");
  return without_batch(ops::conv_forward(with_batch(input), params, spec, static_cast<ops::ConvCache<T>*>(nullptr)));
}

template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& input, const LayerParams<T>& params,
                         const LayerSpec& spec) {
  if (spec.kind != LayerKind::conv1d) throw InvalidArgument("layer is not conv1d");
  return without_batch(ops::conv_forward(with_batch(input), params, spec, static_cast<ops::ConvCache<T>*>(nullptr)));
}

template <typename T>
Tensor<T> maxpool_forward(const Tensor<T>& input, std::size_t window) {
  const LayerSpec spec =
      input.rank() == 3 ? LayerSpec::maxpool2d(window) : LayerSpec::maxpool1d(window);
  if (input.rank() != 2 && input.rank() != 3) {
    throw ShapeError("maxpool expects [L, C] or [H, W, C], got " + to_string(input.shape()));
  }
  return without_batch(ops::maxpool_forward(with_batch(input), spec, nullptr));
}

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& input, const LayerParams<T>& params) {
  if (input.rank() != 1) {
    throw ShapeError("dense expects a flat input, got " + to_string(input.shape()));
  }
  return without_batch(ops::dense_forward(with_batch(input), params));
}

template <typename T>
Tensor<T> relu(const Tensor<T>& input) {
  Tensor<T> out = input;
  for (auto& v : out.values()) v = std::max(v, T{0});
  return out;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  if (logits.rank() != 1) {
    throw ShapeError("softmax expects a flat input, got " + to_string(logits.shape()));
  }
  return without_batch(ops::softmax_rows(with_batch(logits)));
}

template <typename T>
double cross_entropy(const Tensor<T>& probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
    throw InvalidArgument("label " + std::to_string(label) + " outside [0, " +
                          std::to_string(probs.size() - 1) + "]");
  }
  return -std::log(static_cast<double>(probs[static_cast<std::size_t>(label)]));
}

template <typename T>
Tensor<T> dropout_apply(const Tensor<T>& input, double rate, Mode mode, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw InvalidArgument("dropout rate must lie in [0, 1)");
  if (mode == Mode::infer || rate == 0.0) return input;
  Rng rng(seed);
  std::bernoulli_distribution keep(1.0 - rate);
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  Tensor<T> out = input;
  for (auto& v : out.values()) v = keep(rng) ? v * scale : T{0};
  return out;
}

#define TOUCHDIGITS_INSTANTIATE_SAMPLE_OPS(T)                                            \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const LayerParams<T>&,             \
                                    const LayerSpec&);                                   \
  template Tensor<T> conv1d_forward(const Tensor<T>&, const LayerParams<T>&,             \
                                    const LayerSpec&);                                   \
  template Tensor<T> maxpool_forward(const Tensor<T>&, std::size_t);                     \
  template Tensor<T> dense_forward(const Tensor<T>&, const LayerParams<T>&);             \
  template Tensor<T> relu(const Tensor<T>&);                                             \
  template Tensor<T> softmax(const Tensor<T>&);                                          \
  template double cross_entropy(const Tensor<T>&, int);                                  \
  template Tensor<T> dropout_apply(const Tensor<T>&, double, Mode, std::uint64_t);

TOUCHDIGITS_INSTANTIATE_SAMPLE_OPS(float)
TOUCHDIGITS_INSTANTIATE_SAMPLE_OPS(double)
#undef TOUCHDIGITS_INSTANTIATE_SAMPLE_OPS

}  // namespace touchdigits::nn
