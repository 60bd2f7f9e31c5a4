#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace kacq::kan {

/// Uniform B-spline grid over [t_min, t_max] with `grid_size` intervals and `degree`
/// extra knots on each side (extended knot vector of length grid_size + 2*degree + 1).
struct SplineGrid {
  double t_min = -1.0;
  double t_max = 1.0;
  std::size_t grid_size = 3;
  std::size_t degree = 3;

  double spacing() const noexcept { return (t_max - t_min) / static_cast<double>(grid_size); }
  std::size_t basis_count() const noexcept { return grid_size + degree; }
  std::vector<double> knots() const;
  bool contains(double x) const noexcept { return x >= t_min && x <= t_max; }

  friend bool operator==(const SplineGrid&, const SplineGrid&) = default;
};

/// Cox-de Boor evaluation of all basis_count() functions at x. Points outside the domain
/// use the same recursion on the extended knots, so bases fade to zero beyond them.
void bspline_basis(double x, const SplineGrid& grid, std::span<double> out);
std::vector<double> bspline_basis(double x, const SplineGrid& grid);

/// d/dx of every basis function at x.
void bspline_basis_derivative(double x, const SplineGrid& grid, std::span<double> out);
std::vector<double> bspline_basis_derivative(double x, const SplineGrid& grid);

/// Basis values and derivatives in one pass.
void bspline_basis_with_derivative(double x, const SplineGrid& grid, std::span<double> values,
                                   std::span<double> derivatives);

}  // namespace kacq::kan
