#include <benchmark/benchmark.h>

#include <vector>

#include "kacq/kan/bspline.hpp"
#include "kacq/kan/kan_layers.hpp"
#include "kacq/ndcore/rng.hpp"
#include "kacq/ndcore/tensor.hpp"
#include "kacq/qsim/circuits.hpp"
#include "kacq/qsim/quantum_block.hpp"
#include "kacq/qsim/statevector.hpp"
#include "kacq/recurrent/lstm.hpp"

namespace {

kacq::Tensor random_tensor(const kacq::Shape& shape, std::uint64_t seed) {
  kacq::RngStream rng(seed);
  kacq::Tensor t(shape);
  for (double& v : t.storage()) v = rng.uniform(-1.0, 1.0);
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_tensor({n, n}, 1);
  const auto b = random_tensor({n, n}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kacq::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(32, 256);

void BM_BsplineBasis(benchmark::State& state) {
  kacq::kan::SplineGrid grid;
  grid.grid_size = static_cast<std::size_t>(state.range(0));
  std::vector<double> out(grid.basis_count());
  double x = -0.9;
  for (auto _ : state) {
    kacq::kan::bspline_basis(x, grid, out);
    benchmark::DoNotOptimize(out.data());
    x = x > 0.9 ? -0.9 : x + 0.013;
  }
}
BENCHMARK(BM_BsplineBasis)->Arg(3)->Arg(8)->Arg(12);

void BM_DenseKanForward(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(0));
  kacq::kan::DenseKan layer(width, width);
  kacq::RngStream rng(3);
  layer.bank().initialize(rng);
  const auto x = random_tensor({32, width}, 4);
  kacq::ForwardContext ctx;
  for (auto _ : state) benchmark::DoNotOptimize(layer.forward(x, ctx, nullptr));
}
BENCHMARK(BM_DenseKanForward)->Arg(32)->Arg(128);

void BM_StatevectorSel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto w = random_tensor({2, n, 3}, 5);
  const auto gates = kacq::qsim::sel_gates(w, n, 1);
  for (auto _ : state) {
    kacq::qsim::Statevector s(n);
    kacq::qsim::apply_circuit(s, gates);
    benchmark::DoNotOptimize(kacq::qsim::expval_z_all(s));
  }
}
BENCHMARK(BM_StatevectorSel)->DenseRange(2, 10, 2);

void BM_ParameterShift(benchmark::State& state) {
  kacq::qsim::QuantumBlockConfig cfg;
  cfg.n_qubits = static_cast<std::size_t>(state.range(0));
  const auto w = random_tensor({1, cfg.n_qubits, 3}, 6);
  const auto x = random_tensor({cfg.input_width()}, 7);
  for (auto _ : state) benchmark::DoNotOptimize(kacq::qsim::parameter_shift_gradient(x.data(), w, cfg));
}
BENCHMARK(BM_ParameterShift)->Arg(2)->Arg(4)->Arg(6);

void BM_BiLstmForward(benchmark::State& state) {
  const auto units = static_cast<std::size_t>(state.range(0));
  kacq::recurrent::BiLstm layer(1, units, true);
  kacq::RngStream rng(8);
  layer.forward_cell().cell().initialize(rng);
  layer.backward_cell().cell().initialize(rng);
  const auto x = random_tensor({32, 12, 1}, 9);
  kacq::ForwardContext ctx;
  for (auto _ : state) benchmark::DoNotOptimize(layer.forward(x, ctx, nullptr));
}
BENCHMARK(BM_BiLstmForward)->Arg(32)->Arg(64);

}  // namespace
