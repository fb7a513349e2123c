#pragma once

// Test-only reference implementations. Nothing here calls into the batched
// kernels except through Network::forward, which the finite-difference
// oracle treats as a black box.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "touchdigits/nn/network.hpp"

namespace touchdigits::testing {

using nn::LayerSpec;
using nn::ModelSpec;
using nn::Padding;
using nn::Shape;
using nn::Tensor;

// Direct-loop cross-correlation over [H, W, Cin] with weights [kh, kw, Cin, Cout].
inline Tensor<double> naive_conv2d(const Tensor<double>& input, const Tensor<double>& weights,
                                   const Tensor<double>& biases, Padding padding) {
  const long h = static_cast<long>(input.dim(0));
  const long w = static_cast<long>(input.dim(1));
  const long cin = static_cast<long>(input.dim(2));
  const long kh = static_cast<long>(weights.dim(0));
  const long kw = static_cast<long>(weights.dim(1));
  const long cout = static_cast<long>(weights.dim(3));
  const long pad_t = padding == Padding::same ? (kh - 1) / 2 : 0;
  const long pad_l = padding == Padding::same ? (kw - 1) / 2 : 0;
  const long oh = padding == Padding::same ? h : h - kh + 1;
  const long ow = padding == Padding::same ? w : w - kw + 1;
  Tensor<double> out({static_cast<std::size_t>(oh), static_cast<std::size_t>(ow),
                      static_cast<std::size_t>(cout)});
  for (long y = 0; y < oh; ++y)
    for (long x = 0; x < ow; ++x)
      for (long o = 0; o < cout; ++o) {
        double acc = biases[static_cast<std::size_t>(o)];
        for (long dy = 0; dy < kh; ++dy)
          for (long dx = 0; dx < kw; ++dx) {
            const long iy = y + dy - pad_t;
            const long ix = x + dx - pad_l;
            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
            for (long c = 0; c < cin; ++c) {
              acc += input[static_cast<std::size_t>((iy * w + ix) * cin + c)] *
                     weights[static_cast<std::size_t>(((dy * kw + dx) * cin + c) * cout + o)];
            }
          }
        out[static_cast<std::size_t>((y * ow + x) * cout + o)] = acc;
      }
  return out;
}

// Loss of one forward pass with a freshly seeded dropout stream, so every
// evaluation sees the same mask.
inline double traced_loss(const nn::Network<double>& net, const Tensor<double>& batch,
                          const std::vector<int>& labels, std::uint64_t dropout_seed) {
  nn::Rng rng(dropout_seed);
  const auto probs = net.forward(batch, nn::Mode::train, &rng, nullptr);
  double total = 0.0;
  const std::size_t classes = net.spec().class_count;
  for (std::size_t b = 0; b < labels.size(); ++b) {
    total -= std::log(probs[b * classes + static_cast<std::size_t>(labels[b])]);
  }
  return total / static_cast<double>(labels.size());
}

// Central finite differences for every parameter.
inline nn::Gradients<double> numeric_gradients(nn::Network<double> net,
                                               const Tensor<double>& batch,
                                               const std::vector<int>& labels,
                                               std::uint64_t dropout_seed, double step) {
  nn::Gradients<double> grads = net.zero_gradients();
  for (std::size_t i = 0; i < net.params().size(); ++i) {
    auto perturb = [&](Tensor<double>& param, Tensor<double>& grad) {
      for (std::size_t k = 0; k < param.size(); ++k) {
        const double saved = param[k];
        param[k] = saved + step;
        const double up = traced_loss(net, batch, labels, dropout_seed);
        param[k] = saved - step;
        const double down = traced_loss(net, batch, labels, dropout_seed);
        param[k] = saved;
        grad[k] = (up - down) / (2.0 * step);
      }
    };
    if (net.params()[i].empty()) continue;
    perturb(net.params()[i].weights, grads[i].weights);
    perturb(net.params()[i].biases, grads[i].biases);
  }
  return grads;
}

// |a - n| / max(|a|, |n|, floor); the floor keeps near-zero entries from
// amplifying finite-difference round-off.
inline double max_relative_error(const nn::Gradients<double>& analytic,
                                 const nn::Gradients<double>& numeric,
                                 double floor = 1e-6) {
  double worst = 0.0;
  auto compare = [&](const Tensor<double>& a, const Tensor<double>& n) {
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double denom = std::max({std::abs(a[k]), std::abs(n[k]), floor});
      worst = std::max(worst, std::abs(a[k] - n[k]) / denom);
    }
  };
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    compare(analytic[i].weights, numeric[i].weights);
    compare(analytic[i].biases, numeric[i].biases);
  }
  return worst;
}

// Random small network: input <= 8x8 (2D) or length <= 16 (1D), at most
// four features per layer, 2-4 classes.
inline ModelSpec random_miniature_model(std::mt19937_64& rng) {
  auto pick = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  ModelSpec m;
  m.name = "miniature";
  m.input_mode = "test";
  m.class_count = static_cast<std::size_t>(pick(2, 4));
  const bool two_d = pick(0, 1) == 1;
  const std::size_t channels = static_cast<std::size_t>(pick(1, 2));
  if (two_d) {
    m.input_shape = {static_cast<std::size_t>(pick(5, 8)), static_cast<std::size_t>(pick(5, 8)),
                     channels};
  } else {
    m.input_shape = {static_cast<std::size_t>(pick(9, 16)), channels};
  }
  const int conv_layers = pick(1, 2);
  for (int c = 0; c < conv_layers; ++c) {
    const std::size_t kernel = static_cast<std::size_t>(pick(1, 3));
    const std::size_t features = static_cast<std::size_t>(pick(1, 4));
    Padding padding = pick(0, 1) ? Padding::same : Padding::valid;
    const Shape before = m.layers.empty() ? m.input_shape : nn::infer_shapes(m).back();
    if (before[0] < kernel || (two_d && before[1] < kernel)) padding = Padding::same;
    m.layers.push_back(two_d ? LayerSpec::conv2d(kernel, features, padding)
                             : LayerSpec::conv1d(kernel, features, padding));
    m.layers.push_back(LayerSpec::relu());
    if (pick(0, 1)) m.layers.push_back(LayerSpec::dropout(0.25));
    // Pool only while the extent stays >= 2.
    const Shape s = nn::infer_shapes(m).back();
    if (s[0] >= 4 && (!two_d || s[1] >= 4) && pick(0, 1)) {
      m.layers.push_back(two_d ? LayerSpec::maxpool2d(2) : LayerSpec::maxpool1d(2));
    }
  }
  m.layers.push_back(LayerSpec::flatten());
  if (pick(0, 1)) {
    m.layers.push_back(LayerSpec::dense(static_cast<std::size_t>(pick(2, 4))));
    m.layers.push_back(LayerSpec::relu());
    if (pick(0, 1)) m.layers.push_back(LayerSpec::dropout(0.5));
  }
  m.layers.push_back(LayerSpec::dense(m.class_count));
  m.layers.push_back(LayerSpec::softmax());
  return m;
}

inline Tensor<double> random_batch(const Shape& sample, std::size_t batch, std::mt19937_64& rng) {
  Shape shape{batch};
  shape.insert(shape.end(), sample.begin(), sample.end());
  Tensor<double> t(shape);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

// Checks one random miniature model; returns the maximum relative error.
inline double gradient_check_trial(std::uint64_t seed, double step = 1e-5) {
  std::mt19937_64 rng(seed);
  const ModelSpec spec = random_miniature_model(rng);
  nn::Network<double> net(spec);
  net.initialize(seed * 7919 + 1);
  // Non-zero biases so relu kinks are not lined up at the origin.
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (auto& p : net.params()) {
    for (auto& b : p.biases.values()) b = u(rng);
  }
  const std::size_t batch = 3;
  const Tensor<double> x = random_batch(spec.input_shape, batch, rng);
  std::vector<int> labels(batch);
  for (auto& l : labels) {
    l = std::uniform_int_distribution<int>(0, static_cast<int>(spec.class_count) - 1)(rng);
  }
  const std::uint64_t dropout_seed = seed + 17;

  nn::Rng dropout_rng(dropout_seed);
  nn::ForwardTrace<double> trace;
  net.forward(x, nn::Mode::train, &dropout_rng, &trace);
  const auto analytic = net.backward(trace, labels);
  const auto numeric = numeric_gradients(net, x, labels, dropout_seed, step);
  return max_relative_error(analytic, numeric);
}

}  // namespace touchdigits::testing
