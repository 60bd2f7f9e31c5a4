#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kacq/ndcore/tensor.hpp"

namespace kacq {

/// A trainable tensor together with its accumulated gradient.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;

  Param() = default;
  Param(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() {
    if (grad.shape() != value.shape()) grad = Tensor(value.shape());
    grad.fill(0.0);
  }
};

struct AdamState {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::size_t step = 0;
};

/// Bias-corrected Adam update. Moments are created on the first call and must keep
/// matching parameter shapes afterwards.
void adam_step(AdamState& state, std::span<Tensor* const> params,
               std::span<const Tensor* const> grads);
void adam_step(AdamState& state, std::span<Param* const> params);

/// Zeroes the moments of parameter `index` and resizes them to `shape`; used after a
/// parameter has been resized (KAN grid extension).
void reset_moments(AdamState& state, std::size_t index, const Shape& shape);

struct NesterovState {
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::vector<Tensor> velocity;
};

/// Lookahead point theta + mu * v at which the caller evaluates the gradient.
std::vector<Tensor> nesterov_lookahead(const NesterovState& state,
                                       std::span<const Tensor* const> params);
/// v <- mu v - lr * grad(theta + mu v); theta <- theta + v.
void nesterov_step(NesterovState& state, std::span<Tensor* const> params,
                   std::span<const Tensor* const> grads_at_lookahead);

}  // namespace kacq
