#pragma once

#include <cstddef>
#include <vector>

#include "touchdigits/nn/network.hpp"

namespace touchdigits::nn {

struct OptimizerState {
  double base_learning_rate = 0.01;
  double momentum = 0.9;
  double decay_rate = 0.95;
  std::size_t epoch_index = 0;  // zero-based
  bool nesterov = false;

  // Staircase exponential decay: base * decay^epoch_index.
  double effective_learning_rate() const;
  void validate() const;
};

// SGD with classical (or optionally Nesterov) momentum:
//   v <- momentum * v - lr_eff * g;  p <- p + v
template <typename T>
class SgdMomentum {
 public:
  explicit SgdMomentum(OptimizerState state);

  OptimizerState& state() { return state_; }
  const OptimizerState& state() const { return state_; }

  // Throws NumericError (leaving parameters untouched) if any gradient is
  // non-finite.
  void step(std::vector<LayerParams<T>>& params, const Gradients<T>& grads);

  const std::vector<LayerParams<T>>& velocity() const { return velocity_; }

 private:
  OptimizerState state_;
  std::vector<LayerParams<T>> velocity_;
};

}  // namespace touchdigits::nn
