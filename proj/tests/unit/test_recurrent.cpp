#include <cmath>

#include "doctest.h"
#include "kacq/recurrent/lstm.hpp"
#include "layer_check.hpp"

using namespace kacq;
using namespace kacq::recurrent;

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Scalar reference of one LSTM step for a single sample.
void reference_step(const LstmParams& p, const std::vector<double>& x, std::vector<double>& h,
                    std::vector<double>& c) {
  const std::size_t u = p.units, in = p.in_dim;
  std::vector<double> concat(h);
  concat.insert(concat.end(), x.begin(), x.end());
  std::vector<double> nh(u), nc(u);
  for (std::size_t k = 0; k < u; ++k) {
    double z[4];
    for (std::size_t g = 0; g < 4; ++g) {
      const std::size_t row = g * u + k;
      z[g] = p.bias.value[row];
      for (std::size_t j = 0; j < u + in; ++j) z[g] += p.weights.value.at(row, j) * concat[j];
    }
    const double f = sig(z[kForget]), i = sig(z[kInput]), cand = std::tanh(z[kCandidate]),
                 o = sig(z[kOutput]);
    nc[k] = f * c[k] + i * cand;
    nh[k] = o * std::tanh(nc[k]);
  }
  h = nh;
  c = nc;
}

}  // namespace

TEST_CASE("lstm step matches the scalar gate equations") {
  RngStream rng(1);
  LstmParams p(3, 2);
  p.initialize(rng);
  for (double& b : p.bias.value.storage()) b = rng.uniform(-0.5, 0.5);
  const Tensor x = testing::random_tensor({1, 2}, rng);
  const Tensor h0 = testing::random_tensor({1, 3}, rng);
  const Tensor c0 = testing::random_tensor({1, 3}, rng);
  const auto [h, c] = lstm_step(p, x, h0, c0);
  std::vector<double> hr(h0.data().begin(), h0.data().end()), cr(c0.data().begin(), c0.data().end());
  reference_step(p, {x[0], x[1]}, hr, cr);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(h[k] == doctest::Approx(hr[k]).epsilon(1e-13));
    CHECK(c[k] == doctest::Approx(cr[k]).epsilon(1e-13));
  }
}

TEST_CASE("gate accessors") {
  LstmParams p(2, 1);
  Tensor w({2, 3}, 0.25), b({2}, -1.0);
  p.set_gate(kCandidate, w, b);
  CHECK(p.gate_weights(kCandidate) == w);
  CHECK(p.gate_bias(kCandidate) == b);
  CHECK(p.gate_weights(kForget).data()[0] == 0.0);
}

TEST_CASE("reverse lstm runs right to left with aligned outputs") {
  RngStream rng(2);
  Lstm fwd(1, 2, true, false), rev(1, 2, true, true);
  fwd.cell().initialize(rng);
  rev.cell().weights.value = fwd.cell().weights.value;
  const Tensor x = testing::random_tensor({1, 4, 1}, rng);
  Tensor flipped({1, 4, 1});
  for (std::size_t t = 0; t < 4; ++t) flipped.at(0, t, 0) = x.at(0, 3 - t, 0);
  ForwardContext ctx;
  const Tensor a = rev.forward(x, ctx, nullptr);
  const Tensor b = fwd.forward(flipped, ctx, nullptr);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t k = 0; k < 2; ++k) CHECK(a.at(0, t, k) == doctest::Approx(b.at(0, 3 - t, k)));
}

TEST_CASE("bilstm output layout") {
  RngStream rng(3);
  BiLstm seq(1, 2, true), last(1, 2, false);
  seq.forward_cell().cell().initialize(rng);
  seq.backward_cell().cell().initialize(rng);
  last.forward_cell().cell().weights.value = seq.forward_cell().cell().weights.value;
  last.backward_cell().cell().weights.value = seq.backward_cell().cell().weights.value;
  const Tensor x = testing::random_tensor({2, 5, 1}, rng);
  ForwardContext ctx;
  const Tensor s = seq.forward(x, ctx, nullptr);
  const Tensor l = last.forward(x, ctx, nullptr);
  CHECK(s.shape() == Shape{2, 5, 4});
  CHECK(l.shape() == Shape{2, 4});
  for (std::size_t b = 0; b < 2; ++b) {
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(l.at(b, k) == doctest::Approx(s.at(b, 4, k)));
      CHECK(l.at(b, 2 + k) == doctest::Approx(s.at(b, 0, 2 + k)));
    }
  }
}

TEST_CASE("recurrent gradients through time") {
  RngStream rng(4);
  for (int trial = 0; trial < 4; ++trial) {
    const bool seqs = trial % 2 == 0;
    Lstm l(2, 3, seqs, trial >= 2);
    l.cell().initialize(rng);
    const Tensor x = testing::random_tensor({2, 4, 2}, rng);
    CHECK(testing::check_layer(l, x, trial).worst() < 1e-6);

    BiLstm bl(2, 3, seqs);
    bl.forward_cell().cell().initialize(rng);
    bl.backward_cell().cell().initialize(rng);
    CHECK(testing::check_layer(bl, x, trial + 10).worst() < 1e-6);
  }
}
