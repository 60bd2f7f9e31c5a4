#pragma once

#include <cstddef>
#include <functional>

#include "config.hpp"
#include "kacq/dataset/pipeline.hpp"
#include "kacq/models/model.hpp"

namespace kacq::cli {

/// Model spec for data of the given width; the MLP version gets parameter-matched widths.
models::ModelSpec resolve_spec(const models::ModelSpec& spec, std::size_t n_features);

dataset::PreparedData load_and_prepare(const RunConfig& config);

/// Runs fn(0..n-1) on up to `threads` workers. The first failure (lowest index) is
/// rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

int cmd_preprocess(const RunConfig& config);
int cmd_train(const RunConfig& config);
int cmd_evaluate(const RunConfig& config);
int cmd_crossval(const RunConfig& config);
int cmd_ablate(const RunConfig& config);
int cmd_benchmark_vqc(const RunConfig& config);
int cmd_conformal(const RunConfig& config);
int cmd_explain(const RunConfig& config);
int cmd_ttest(const RunConfig& config);

}  // namespace kacq::cli
