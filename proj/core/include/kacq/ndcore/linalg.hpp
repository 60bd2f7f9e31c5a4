#pragma once

#include "kacq/ndcore/tensor.hpp"

namespace kacq {

/// Solves A x = b for symmetric positive definite A[n x n] by Cholesky. b may be [n] or
/// [n x k]. Throws NumericError if A is not numerically positive definite.
Tensor solve_spd(const Tensor& a, const Tensor& b);

/// Least-squares solution of min ||X beta - y|| (+ ridge * ||beta||^2) via the normal
/// equations. X[n x d], y[n] or [n x k].
Tensor least_squares(const Tensor& x, const Tensor& y, double ridge = 0.0);

}  // namespace kacq
