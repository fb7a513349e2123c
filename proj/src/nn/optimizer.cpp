#include "touchdigits/nn/optimizer.hpp"

#include <cmath>

namespace touchdigits::nn {

double OptimizerState::effective_learning_rate() const {
  return base_learning_rate * std::pow(decay_rate, static_cast<double>(epoch_index));
}

void OptimizerState::validate() const {
  if (!(base_learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must lie in [0, 1)");
  if (!(decay_rate > 0.0 && decay_rate <= 1.0)) {
    throw InvalidArgument("decay rate must lie in (0, 1]");
  }
}

template <typename T>
SgdMomentum<T>::SgdMomentum(OptimizerState state) : state_(state) {
  state_.validate();
}

template <typename T>
void SgdMomentum<T>::step(std::vector<LayerParams<T>>& params, const Gradients<T>& grads) {
  if (grads.size() != params.size()) throw ShapeError("gradient list does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].weights.shape() != grads[i].weights.shape() ||
        params[i].biases.shape() != grads[i].biases.shape()) {
      throw ShapeError("gradient shape mismatch at layer " + std::to_string(i));
    }
    if (!all_finite(grads[i].weights) || !all_finite(grads[i].biases)) {
      throw NumericError("non-finite gradient at layer " + std::to_string(i));
    }
  }
  if (velocity_.empty()) {
    for (const auto& p : params) {
      LayerParams<T> v;
      if (!p.empty()) {
        v.weights = Tensor<T>(p.weights.shape());
        v.biases = Tensor<T>(p.biases.shape());
      }
      velocity_.push_back(std::move(v));
    }
  }

  const T lr = static_cast<T>(state_.effective_learning_rate());
  const T mu = static_cast<T>(state_.momentum);
  auto update = [&](Tensor<T>& p, Tensor<T>& v, const Tensor<T>& g) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      v[k] = mu * v[k] - lr * g[k];
      p[k] += state_.nesterov ? mu * v[k] - lr * g[k] : v[k];
    }
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].empty()) continue;
    update(params[i].weights, velocity_[i].weights, grads[i].weights);
    update(params[i].biases, velocity_[i].biases, grads[i].biases);
  }
}

template class SgdMomentum<float>;
template class SgdMomentum<double>;

}  // namespace touchdigits::nn
