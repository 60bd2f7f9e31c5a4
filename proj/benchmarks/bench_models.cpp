#include <benchmark/benchmark.h>

#include "kacq/metrics/metrics.hpp"
#include "kacq/models/loss.hpp"
#include "kacq/models/model.hpp"
#include "kacq/ndcore/rng.hpp"

namespace {

kacq::Tensor random_batch(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  kacq::RngStream rng(seed);
  kacq::Tensor t({rows, cols});
  for (double& v : t.storage()) v = rng.uniform01();
  return t;
}

void BM_KacqDcnnTrainStep(benchmark::State& state) {
  kacq::models::ModelSpec spec;
  spec.kind = kacq::models::ModelKind::KacqDcnn;
  auto model = kacq::models::Model::build(spec, 42);
  const auto batch = static_cast<std::size_t>(state.range(0));
  const auto x = random_batch(batch, spec.hp.n_features, 1);
  std::vector<int> y(batch);
  for (std::size_t i = 0; i < batch; ++i) y[i] = static_cast<int>(i % 2);
  kacq::RngStream rng(2);
  for (auto _ : state) {
    kacq::ForwardContext ctx{kacq::Mode::Train, &rng, {}};
    kacq::CachePtr cache;
    const auto probs = model.forward(x, ctx, &cache);
    const auto loss = kacq::models::bce_loss(probs, y);
    model.zero_grad();
    model.backward(cache.get(), loss.grad);
    benchmark::DoNotOptimize(loss.value);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_KacqDcnnTrainStep)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_ModelPredict(benchmark::State& state) {
  kacq::models::ModelSpec spec;
  spec.kind = static_cast<kacq::models::ModelKind>(state.range(0));
  auto model = kacq::models::Model::build(spec, 42);
  const auto x = random_batch(256, spec.hp.n_features, 3);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(x));
  state.SetLabel(kacq::models::to_string(spec.kind));
}
BENCHMARK(BM_ModelPredict)
    ->Arg(static_cast<int>(kacq::models::ModelKind::BilstmKannet))
    ->Arg(static_cast<int>(kacq::models::ModelKind::QdenseKannet))
    ->Arg(static_cast<int>(kacq::models::ModelKind::KacqDcnn))
    ->Arg(static_cast<int>(kacq::models::ModelKind::Vqc))
    ->Unit(benchmark::kMillisecond);

void BM_RocAuc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  kacq::RngStream rng(4);
  std::vector<double> s(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(rng.below(2));
    s[i] = rng.uniform01() + 0.3 * y[i];
  }
  for (auto _ : state) benchmark::DoNotOptimize(kacq::metrics::roc_auc(s, y));
}
BENCHMARK(BM_RocAuc)->Arg(1000)->Arg(100000);

}  // namespace
