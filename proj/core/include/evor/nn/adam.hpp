#pragma once

#include <cmath>

#include "evor/nn/mlp.hpp"

namespace evor::nn {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <class T>
struct AdamState {
  AdamConfig config;
  VectorX<T> m;
  VectorX<T> v;
  long step = 0;

  AdamState() = default;
  AdamState(AdamConfig cfg, Eigen::Index n)
      : config(cfg), m(VectorX<T>::Zero(n)), v(VectorX<T>::Zero(n)) {}
};

// Bias-corrected Adam update, in place.
template <class T>
void adam_step(AdamState<T>& state, VectorX<T>& params, const VectorX<T>& grads) {
  if (state.m.size() != params.size() || grads.size() != params.size())
    throw ShapeError("adam_step: optimizer state, parameters and gradients differ in size");
  const auto& c = state.config;
  ++state.step;
  const T b1 = static_cast<T>(c.beta1);
  const T b2 = static_cast<T>(c.beta2);
  state.m = b1 * state.m + (T(1) - b1) * grads;
  state.v = b2 * state.v + (T(1) - b2) * grads.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  const T step_size = static_cast<T>(c.lr / bc1);
  const T inv_sqrt_bc2 = static_cast<T>(1.0 / std::sqrt(bc2));
  const T eps = static_cast<T>(c.eps);
  params.array() -= step_size * state.m.array() / (state.v.array().sqrt() * inv_sqrt_bc2 + eps);
}

template <class T>
void adam_step(AdamState<T>& state, Mlp<T>& net, const VectorX<T>& grads) {
  adam_step(state, net.params(), grads);
}

}  // namespace evor::nn
