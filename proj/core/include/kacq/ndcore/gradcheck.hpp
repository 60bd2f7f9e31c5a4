#pragma once

#include <functional>

#include "kacq/ndcore/tensor.hpp"

namespace kacq {

/// Central differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps) for every entry of x.
/// Throws NumericError if f returns a non-finite value.
Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                            double eps = 1e-5);

/// ||a - b|| / max(||a|| + ||b||, floor); the project-wide gradient comparison.
double relative_error(const Tensor& analytic, const Tensor& numeric, double floor = 1e-12);

}  // namespace kacq
