#pragma once

#include <cstdint>

#include "kacq/ndcore/layer.hpp"

namespace kacq::testing {

struct GradCheck {
  double input_error = 0.0;
  /// Largest relative error over the layer's parameter tensors.
  double param_error = 0.0;
  double worst() const { return input_error > param_error ? input_error : param_error; }
};

/// Compares backward() against central differences of L = <forward(x), dy> for a random
/// upstream dy, on the input and on every parameter.
GradCheck check_layer(Layer& layer, const Tensor& x, std::uint64_t seed, double eps = 1e-5);

Tensor random_tensor(const Shape& shape, RngStream& rng, double lo = -1.0, double hi = 1.0);

}  // namespace kacq::testing
