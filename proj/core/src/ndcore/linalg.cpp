#include "kacq/ndcore/linalg.hpp"

#include <cmath>

#include "kacq/error.hpp"

namespace kacq {

Tensor solve_spd(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || a.dim(0) != a.dim(1)) throw ShapeError("solve_spd: A must be square");
  const std::size_t n = a.dim(0);
  if (b.dim(0) != n) throw ShapeError("solve_spd: rhs row count mismatch");
  const std::size_t k = b.rank() == 1 ? 1 : b.dim(1);

  // Lower-triangular factor, row-major.
  Tensor l({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a.at(i, j);
      for (std::size_t p = 0; p < j; ++p) s -= l.at(i, p) * l.at(j, p);
      if (i == j) {
        if (!(s > 0.0)) throw NumericError("solve_spd: matrix is not positive definite");
        l.at(i, i) = std::sqrt(s);
      } else {
        l.at(i, j) = s / l.at(j, j);
      }
    }
  }

  Tensor x = b;
  for (std::size_t c = 0; c < k; ++c) {
    auto rhs = [&](std::size_t i) -> double& { return x[i * k + c]; };
    for (std::size_t i = 0; i < n; ++i) {
      double s = rhs(i);
      for (std::size_t p = 0; p < i; ++p) s -= l.at(i, p) * rhs(p);
      rhs(i) = s / l.at(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = rhs(i);
      for (std::size_t p = i + 1; p < n; ++p) s -= l.at(p, i) * rhs(p);
      rhs(i) = s / l.at(i, i);
    }
  }
  return x;
}

Tensor least_squares(const Tensor& x, const Tensor& y, double ridge) {
  if (x.rank() != 2 || y.dim(0) != x.dim(0)) throw ShapeError("least_squares: shape mismatch");
  Tensor gram = matmul_at(x, x);
  for (std::size_t i = 0; i < gram.dim(0); ++i) gram.at(i, i) += ridge;
  const bool vec = y.rank() == 1;
  Tensor y2 = vec ? y.reshaped({y.dim(0), 1}) : y;
  Tensor rhs = matmul_at(x, y2);
  Tensor beta = solve_spd(gram, rhs);
  return vec ? std::move(beta).reshaped({x.dim(1)}) : beta;
}

}  // namespace kacq
