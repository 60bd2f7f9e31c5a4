#include <cmath>

#include "doctest.h"
#include "kacq/error.hpp"
#include "kacq/kan/bspline.hpp"
#include "kacq/kan/kan_layers.hpp"
#include "layer_check.hpp"

using namespace kacq;
using namespace kacq::kan;

namespace {

// Textbook recursive Cox-de Boor on an explicit knot vector.
double cox_de_boor(const std::vector<double>& t, std::size_t i, std::size_t p, double x) {
  if (p == 0) return (t[i] <= x && x < t[i + 1]) ? 1.0 : 0.0;
  double left = 0, right = 0;
  if (t[i + p] != t[i]) left = (x - t[i]) / (t[i + p] - t[i]) * cox_de_boor(t, i, p - 1, x);
  if (t[i + p + 1] != t[i + 1]) {
    right = (t[i + p + 1] - x) / (t[i + p + 1] - t[i + 1]) * cox_de_boor(t, i + 1, p - 1, x);
  }
  return left + right;
}

}  // namespace

TEST_CASE("knot vector layout") {
  SplineGrid g{-1.0, 1.0, 4, 3};
  const auto k = g.knots();
  REQUIRE(k.size() == 4 + 2 * 3 + 1);
  CHECK(k.front() == doctest::Approx(-2.5));
  CHECK(k.back() == doctest::Approx(2.5));
  CHECK(g.basis_count() == 7);
}

TEST_CASE("basis matches the recursive definition") {
  RngStream rng(1);
  for (std::size_t gs : {1, 3, 5, 9}) {
    for (std::size_t deg : {1, 2, 3}) {
      SplineGrid g{-0.7, 1.9, gs, deg};
      const auto t = g.knots();
      for (int trial = 0; trial < 50; ++trial) {
        const double x = rng.uniform(t.front() + 1e-9, t.back() - 1e-9);
        const auto b = bspline_basis(x, g);
        REQUIRE(b.size() == g.basis_count());
        for (std::size_t i = 0; i < b.size(); ++i) CHECK(b[i] == doctest::Approx(cox_de_boor(t, i, deg, x)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("partition of unity on the domain") {
  RngStream rng(2);
  SplineGrid g{-1.0, 1.0, 5, 3};
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(-1.0, 1.0);
    double s = 0;
    for (double v : bspline_basis(x, g)) s += v;
    CHECK(std::abs(s - 1.0) < 1e-10);
  }
  double s = 0;
  for (double v : bspline_basis(1.0, g)) s += v;
  CHECK(std::abs(s - 1.0) < 1e-10);
}

TEST_CASE("basis derivative matches finite differences") {
  SplineGrid g{-1.0, 1.0, 4, 3};
  for (double x : {-0.93, -0.31, 0.02, 0.55, 0.97}) {
    const auto d = bspline_basis_derivative(x, g);
    const auto hi = bspline_basis(x + 1e-6, g), lo = bspline_basis(x - 1e-6, g);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(d[i] == doctest::Approx((hi[i] - lo[i]) / 2e-6).epsilon(1e-6));
    std::vector<double> v(g.basis_count()), dv(g.basis_count());
    bspline_basis_with_derivative(x, g, v, dv);
    CHECK(v == bspline_basis(x, g));
    CHECK(dv == d);
  }
}

TEST_CASE("edge function formula") {
  RngStream rng(3);
  EdgeFunctionBank bank(3, 2, SplineGrid{});
  bank.initialize(rng);
  const Tensor x = testing::random_tensor({4, 3}, rng);
  const Tensor y = bank.forward(x, nullptr);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t i = 0; i < 2; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < 3; ++j) {
        const double xv = x.at(r, j);
        double spline = 0;
        const auto b = bspline_basis(xv, bank.grid());
        for (std::size_t k = 0; k < b.size(); ++k) spline += bank.coefficients().value.at(i, j, k) * b[k];
        const double phi = bank.base_weights().value.at(i, j) * xv / (1 + std::exp(-xv)) +
                           bank.spline_scales().value.at(i, j) * spline;
        CHECK(bank.edge_value(i, j, xv) == doctest::Approx(phi).epsilon(1e-12));
        s += phi;
      }
      CHECK(y.at(r, i) == doctest::Approx(s).epsilon(1e-12));
    }
  }
}

TEST_CASE("dense and conv KAN gradients") {
  RngStream rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    DenseKan layer(3, 4, SplineGrid{-1, 1, 3 + static_cast<std::size_t>(trial), 3});
    layer.bank().initialize(rng);
    const Tensor x = testing::random_tensor({2, 5, 3}, rng, -1.4, 1.4);
    CHECK(layer.output_shape({5, 3}) == Shape{5, 4});
    CHECK(testing::check_layer(layer, x, trial).worst() < 1e-6);
  }
  for (std::size_t stride : {1, 2}) {
    Conv1dKan conv(2, 3, 3, stride);
    conv.bank().initialize(rng);
    const Tensor x = testing::random_tensor({2, 9, 2}, rng);
    CHECK(conv.output_shape({9, 2}) == Shape{conv.output_length(9), 3});
    CHECK(testing::check_layer(conv, x, 7).worst() < 1e-6);
  }
  Conv1dKan conv(1, 2, 3, 2);
  CHECK(conv.output_length(12) == 5);
  CHECK_THROWS(conv.output_shape({2, 1}));
}

TEST_CASE("grid update preserves edge functions and respects the cap") {
  RngStream rng(5);
  EdgeFunctionBank bank(2, 2, SplineGrid{-1, 1, 3, 3});
  bank.initialize(rng, KanInit{0.5});
  EdgeFunctionBank before = bank;
  CHECK(bank.update_grid(-2.0, 1.5, 12));
  CHECK(bank.grid().t_min <= -2.0);
  CHECK(bank.grid().t_max >= 1.5);
  CHECK(bank.grid().grid_size <= 12);
  CHECK(bank.coefficients().value.dim(2) == bank.grid().basis_count());
  double sq = 0;
  for (int p = 0; p <= 200; ++p) {
    const double x = -1.0 + 2.0 * p / 200;
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) {
        const double d = bank.edge_value(i, j, x) - before.edge_value(i, j, x);
        sq += d * d;
      }
  }
  CHECK(std::sqrt(sq / (201 * 4)) < 1e-6);

  CHECK_FALSE(bank.update_grid(-0.5, 0.5, 12));
  CHECK_FALSE(bank.update_grid(0.3, 0.3, 12));
  EdgeFunctionBank capped(1, 1, SplineGrid{-1, 1, 3, 3});
  capped.update_grid(-100, 100, 5);
  CHECK(capped.grid().grid_size == 5);
}

TEST_CASE("layer state round trip") {
  RngStream rng(6);
  DenseKan a(2, 2);
  a.bank().initialize(rng);
  a.bank().update_grid(-3, 3, 12);
  DenseKan b(2, 2);
  b.load_state(a.state());
  CHECK(b.bank().grid() == a.bank().grid());
  CHECK(b.bank().coefficients().value.shape() == a.bank().coefficients().value.shape());
}
