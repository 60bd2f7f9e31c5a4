#include "kacq/kan/bspline.hpp"

#include <algorithm>
#include <array>

#include "kacq/error.hpp"

namespace kacq::kan {

std::vector<double> SplineGrid::knots() const {
  const double h = spacing();
  const std::size_t n = grid_size + 2 * degree + 1;
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = t_min + (static_cast<double>(i) - static_cast<double>(degree)) * h;
  }
  return t;
}

namespace {

// Fills `level` with the degree-`upto` bases (length knots-1-upto) and, when requested,
// `prev` with the degree-(upto-1) bases. Scratch buffers avoid allocation per call for
// small grids.
void cox_de_boor(double x, const SplineGrid& grid, std::size_t upto, std::vector<double>& level,
                 std::vector<double>* prev) {
  const double h = grid.spacing();
  const std::size_t n_knots = grid.grid_size + 2 * grid.degree + 1;
  const double t0 = grid.t_min - static_cast<double>(grid.degree) * h;
  auto knot = [&](std::size_t i) { return t0 + static_cast<double>(i) * h; };

  level.assign(n_knots - 1, 0.0);
  for (std::size_t i = 0; i + 1 < n_knots; ++i) {
    if (x >= knot(i) && x < knot(i + 1)) {
      level[i] = 1.0;
      break;
    }
  }
  for (std::size_t k = 1; k <= upto; ++k) {
    if (prev != nullptr && k == upto) *prev = level;
    const double inv = 1.0 / (static_cast<double>(k) * h);
    const std::size_t count = n_knots - 1 - k;
    for (std::size_t i = 0; i < count; ++i) {
      const double left = (x - knot(i)) * level[i];
      const double right = (knot(i + k + 1) - x) * level[i + 1];
      level[i] = (left + right) * inv;
    }
    level.resize(count);
  }
  if (prev != nullptr && upto == 0) prev->clear();
}

}  // namespace

void bspline_basis(double x, const SplineGrid& grid, std::span<double> out) {
  if (out.size() != grid.basis_count()) throw ShapeError("bspline_basis: output size mismatch");
  thread_local std::vector<double> level;
  cox_de_boor(x, grid, grid.degree, level, nullptr);
  std::copy(level.begin(), level.end(), out.begin());
}

std::vector<double> bspline_basis(double x, const SplineGrid& grid) {
  std::vector<double> out(grid.basis_count());
  bspline_basis(x, grid, out);
  return out;
}

void bspline_basis_with_derivative(double x, const SplineGrid& grid, std::span<double> values,
                                   std::span<double> derivatives) {
  const std::size_t nb = grid.basis_count();
  if (values.size() != nb || derivatives.size() != nb) {
    throw ShapeError("bspline_basis_with_derivative: output size mismatch");
  }
  thread_local std::vector<double> level;
  thread_local std::vector<double> lower;
  if (grid.degree == 0) {
    cox_de_boor(x, grid, 0, level, nullptr);
    std::copy(level.begin(), level.end(), values.begin());
    std::fill(derivatives.begin(), derivatives.end(), 0.0);
    return;
  }
  cox_de_boor(x, grid, grid.degree, level, &lower);
  std::copy(level.begin(), level.end(), values.begin());
  // Uniform knots: B'_{i,p} = (B_{i,p-1} - B_{i+1,p-1}) / h.
  const double inv_h = 1.0 / grid.spacing();
  for (std::size_t i = 0; i < nb; ++i) derivatives[i] = (lower[i] - lower[i + 1]) * inv_h;
}

void bspline_basis_derivative(double x, const SplineGrid& grid, std::span<double> out) {
  std::vector<double> values(grid.basis_count());
  bspline_basis_with_derivative(x, grid, values, out);
}

std::vector<double> bspline_basis_derivative(double x, const SplineGrid& grid) {
  std::vector<double> out(grid.basis_count());
  bspline_basis_derivative(x, grid, out);
  return out;
}

}  // namespace kacq::kan
