#pragma once

#include <span>

#include "kacq/ndcore/tensor.hpp"

namespace kacq::models {

struct LossValue {
  double value = 0.0;
  Tensor grad;  // dL/dprobs, same shape as probs
};

inline constexpr double kProbClamp = 1e-12;

/// Binary cross-entropy on the two sigmoid outputs against one-hot targets, averaged
/// over both outputs and the batch:
///   L = -1/(2B) sum_b [y log p1 + (1-y) log(1-p1) + (1-y) log p0 + y log(1-p0)].
/// Probabilities are clamped to [1e-12, 1 - 1e-12]; the gradient is zero where clamped.
LossValue bce_loss(const Tensor& probs, std::span<const int> labels);

/// Mean of (p1 - y)^2 over the batch; probs is [B x 2].
LossValue square_loss(const Tensor& probs, std::span<const int> labels);

}  // namespace kacq::models
