#include <cmath>
#include <sstream>

#include "doctest.h"
#include "kacq/error.hpp"
#include "kacq/ndcore/activation.hpp"
#include "kacq/ndcore/format.hpp"
#include "kacq/ndcore/gradcheck.hpp"
#include "kacq/ndcore/linalg.hpp"
#include "kacq/ndcore/optim.hpp"
#include "kacq/ndcore/rng.hpp"
#include "kacq/ndcore/tensor.hpp"
#include "layer_check.hpp"

using namespace kacq;

namespace {

Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  Tensor c({a.dim(0), b.dim(1)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < b.dim(1); ++j) {
      long double s = 0;
      for (std::size_t k = 0; k < a.dim(1); ++k) s += a.at(i, k) * b.at(k, j);
      c.at(i, j) = static_cast<double>(s);
    }
  return c;
}

}  // namespace

TEST_CASE("tensor construction and shape checks") {
  Tensor t({2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(t.rank() == 2);
  CHECK(shape_string(t.shape()) == "[2 x 3]");
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(Tensor::from_rows({{1, 2}, {3}}), ShapeError);
  auto r = Tensor::from_rows({{1, 2}, {3, 4}});
  CHECK(r.at(1, 0) == 3);
  CHECK(r.row(1)[1] == 4);
  CHECK_THROWS(r.reshaped({3}));
  CHECK(r.reshaped({4, 1}).dim(0) == 4);
}

TEST_CASE("matmul variants agree with a naive triple loop") {
  RngStream rng(3);
  for (std::size_t m : {1, 3, 17}) {
    for (std::size_t k : {1, 5, 33}) {
      for (std::size_t n : {1, 4, 19}) {
        const Tensor a = testing::random_tensor({m, k}, rng);
        const Tensor b = testing::random_tensor({k, n}, rng);
        const Tensor ref = naive_matmul(a, b);
        CHECK(max_abs_diff(matmul(a, b), ref) < 1e-12);
        CHECK(max_abs_diff(matmul_bt(a, transpose(b)), ref) < 1e-12);
        CHECK(max_abs_diff(matmul_at(transpose(a), b), ref) < 1e-12);
      }
    }
  }
  CHECK_THROWS_AS(matmul(Tensor({2, 3}), Tensor({2, 3})), ShapeError);
}

TEST_CASE("elementwise helpers") {
  auto a = Tensor::from_rows({{1, 2}, {3, 4}});
  auto b = Tensor::from_rows({{0.5, 1}, {1, 2}});
  CHECK((a + b).at(1, 1) == 6);
  CHECK((a - b).at(0, 0) == 0.5);
  CHECK((2.0 * a).at(0, 1) == 4);
  CHECK(hadamard(a, b).at(1, 0) == 3);
  axpy(2.0, b, a);
  CHECK(a.at(1, 1) == 8);
  CHECK(l2_norm(std::vector<double>{3, 4}) == 5);
  Tensor bad({2}, std::vector<double>{1, NAN});
  CHECK_FALSE(bad.all_finite());
  CHECK_THROWS_AS(check_finite(bad, "x"), NumericError);
}

TEST_CASE("blob round trip is exact") {
  RngStream rng(9);
  const Tensor t = testing::random_tensor({3, 4, 2}, rng, -1e6, 1e6);
  std::stringstream ss;
  write_blob(ss, t);
  CHECK(read_blob(ss) == t);
}

TEST_CASE("rng streams are deterministic and independent") {
  RngStream a(42, 1), b(42, 1), c(42, 2);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
  }
  RngStream p(5);
  const auto before = p.position();
  (void)p.child(3);
  CHECK(p.position() == before);
  RngStream u(11);
  double mean = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double v = u.uniform01();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
    mean += v / n;
  }
  CHECK(std::abs(mean - 0.5) < 0.01);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) ++counts[u.below(7)];
  for (int c7 : counts) CHECK(std::abs(c7 - 1000) < 150);
  auto perm = u.permutation(50);
  std::sort(perm.begin(), perm.end());
  for (std::size_t i = 0; i < perm.size(); ++i) CHECK(perm[i] == i);
  CHECK(stream_id("shuffle") == stream_id("shuffle"));
  CHECK(stream_id("shuffle") != stream_id("dropout"));
}

TEST_CASE("activations and derivatives") {
  for (double x : {-3.0, -0.2, 0.0, 0.7, 4.0}) {
    for (Activation a : {Activation::Identity, Activation::Sigmoid, Activation::Tanh,
                         Activation::Silu}) {
      const double h = 1e-6;
      const double fd = (activate(a, x + h) - activate(a, x - h)) / (2 * h);
      CHECK(activate_derivative(a, x, activate(a, x)) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
  CHECK(activate(Activation::Relu, -1) == 0);
  CHECK(activate(Activation::Relu, 2) == 2);
  CHECK(silu(1.0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
  CHECK(activation_from_string(to_string(Activation::Silu)) == Activation::Silu);
  CHECK_THROWS_AS(activation_from_string("gelu"), ParameterError);
}

TEST_CASE("spd solve and least squares") {
  RngStream rng(4);
  const Tensor m = testing::random_tensor({6, 6}, rng);
  Tensor a = matmul_at(m, m);
  for (std::size_t i = 0; i < 6; ++i) a.at(i, i) += 1.0;
  const Tensor x = testing::random_tensor({6, 2}, rng);
  const Tensor b = matmul(a, x);
  CHECK(max_abs_diff(solve_spd(a, b), x) < 1e-10);
  CHECK_THROWS_AS(solve_spd(Tensor::from_rows({{1, 2}, {2, 1}}), Tensor::vector({1, 1})),
                  NumericError);

  const Tensor design = testing::random_tensor({40, 3}, rng);
  const Tensor beta = Tensor::from_rows({{0.5}, {-2}, {3}});
  const Tensor y = matmul(design, beta);
  CHECK(max_abs_diff(least_squares(design, y), beta) < 1e-10);
}

TEST_CASE("adam matches a hand-rolled update") {
  Param p("w", Tensor::vector({1.0, -2.0}));
  p.grad = Tensor::vector({0.5, -0.25});
  AdamState s;
  s.learning_rate = 0.1;
  std::vector<Param*> ps{&p};
  adam_step(s, ps);
  // First bias-corrected step moves each weight by lr * sign(g).
  CHECK(p.value[0] == doctest::Approx(0.9).epsilon(1e-7));
  CHECK(p.value[1] == doctest::Approx(-1.9).epsilon(1e-7));
  reset_moments(s, 0, {3});
  CHECK(s.first_moment[0].size() == 3);
}

TEST_CASE("adam and nesterov minimise a quadratic") {
  Tensor w = Tensor::vector({3.0, -4.0});
  AdamState s;
  s.learning_rate = 0.1;
  for (int i = 0; i < 500; ++i) {
    Tensor g = 2.0 * w;
    Tensor* params[] = {&w};
    const Tensor* grads[] = {&g};
    adam_step(s, params, grads);
  }
  CHECK(l2_norm(w.data()) < 1e-2);

  Tensor v = Tensor::vector({3.0, -4.0});
  NesterovState ns;
  ns.learning_rate = 0.05;
  for (int i = 0; i < 200; ++i) {
    const Tensor* cp[] = {&v};
    auto look = nesterov_lookahead(ns, cp);
    Tensor g = 2.0 * look[0];
    Tensor* params[] = {&v};
    const Tensor* grads[] = {&g};
    nesterov_step(ns, params, grads);
  }
  CHECK(l2_norm(v.data()) < 1e-6);
}

TEST_CASE("finite differences of a known function") {
  const Tensor x = Tensor::vector({0.3, -1.2, 2.0});
  auto f = [](const Tensor& t) { return t[0] * t[0] + std::sin(t[1]) * t[2]; };
  const Tensor g = finite_diff_gradient(f, x);
  const Tensor exact = Tensor::vector({0.6, std::cos(-1.2) * 2.0, std::sin(-1.2)});
  CHECK(relative_error(g, exact) < 1e-9);
}

TEST_CASE("shortest double formatting") {
  std::ostringstream out;
  shortest_doubles(out) << 0.05 << ',' << -0.8 << ',' << 1.0 / 3.0 << ',' << 7;
  CHECK(out.str() == "0.05,-0.8,0.3333333333333333,7");
}
