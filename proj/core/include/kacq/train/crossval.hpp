#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kacq/dataset/pipeline.hpp"
#include "kacq/metrics/metrics.hpp"
#include "kacq/models/model.hpp"
#include "kacq/train/train.hpp"

namespace kacq::train {

struct CvFold {
  std::size_t fold = 0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  metrics::MetricsReport test;
  History history;
};

struct CvResult {
  std::vector<CvFold> folds;
  /// Mean and population std per metric (maP, maR, maF1, accuracy, roc_auc, mcc, kappa).
  std::map<std::string, metrics::Summary> summary;

  std::vector<double> metric(const std::string& name) const;
  nlohmann::json to_json() const;
};

double metric_value(const metrics::MetricsReport& r, const std::string& name);
const std::vector<std::string>& metric_names();
std::map<std::string, metrics::Summary> summarize_reports(
    const std::vector<metrics::MetricsReport>& reports);

/// Stratified k-fold CV over deduplicated records. Each fold fits the preprocessing on its
/// training rows, builds a fresh model (n_features taken from the prepared matrix), fits
/// it and evaluates on the held-out fold. Failures are rethrown with the fold index.
CvResult cross_validate(const models::ModelSpec& spec, const std::vector<dataset::RawRecord>& records,
                        const dataset::PipelineConfig& pipeline, std::size_t k,
                        const TrainConfig& config, std::uint64_t seed);

/// Seed for fold (or trial) `index` derived from a root seed.
std::uint64_t derived_seed(std::uint64_t root, std::string_view purpose, std::size_t index);

}  // namespace kacq::train
