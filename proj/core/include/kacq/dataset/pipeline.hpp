#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "kacq/dataset/features.hpp"
#include "kacq/dataset/records.hpp"

namespace kacq::dataset {

struct PipelineConfig {
  LoadOptions load;
  EncodingMode encoding = EncodingMode::Ordinal;
  bool cap_outliers = true;
  bool smote = false;
  std::size_t smote_k = 5;
  bool interactions = false;
  std::vector<std::pair<std::string, std::string>> interaction_pairs = {
      {"Age", "MaxHR"}, {"ChestPainType", "ExerciseAngina"}};
  /// Appends the logistic baseline's class-1 probability as the last column.
  bool augment_baseline = true;
  std::size_t baseline_steps = 500;
  double baseline_learning_rate = 0.05;
  double train_ratio = 0.8;
  std::uint64_t seed = 42;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

void to_json(nlohmann::json& j, const PipelineConfig& c);
void from_json(const nlohmann::json& j, PipelineConfig& c);

/// Statistics fitted on a training partition and replayed on any other rows.
struct Preprocessor {
  EncodingMode encoding = EncodingMode::Ordinal;
  ImputeStats impute;
  std::optional<IqrBounds> iqr;
  ScalerState scaler;
  std::vector<std::pair<std::string, std::string>> interactions;

  static Preprocessor fit(const std::vector<RawRecord>& train, const PipelineConfig& config);
  /// Impute, encode, cap and scale with the fitted statistics, then add interactions.
  FeatureMatrix transform(const std::vector<RawRecord>& records) const;
  nlohmann::json to_json() const;
};

struct PreparedData {
  FeatureMatrix train;
  FeatureMatrix test;
  Preprocessor preprocessor;
  std::vector<std::size_t> train_rows;  // indices into the deduplicated records
  std::vector<std::size_t> test_rows;
  std::size_t raw_count = 0;
  std::size_t unique_count = 0;
};

/// Logistic baseline fitted on `train` (full-batch Adam); its class-1 probability is
/// appended as column "BaselineProb" to both matrices.
std::pair<FeatureMatrix, FeatureMatrix> augment_with_baseline(const FeatureMatrix& train,
                                                              const FeatureMatrix& test,
                                                              std::uint64_t seed,
                                                              std::size_t steps = 500,
                                                              double learning_rate = 0.05);

/// Fits on records[train_idx] and transforms both sides; SMOTE and augmentation follow
/// the config. `records` are used as given (no deduplication).
PreparedData prepare_split(const std::vector<RawRecord>& records,
                           const std::vector<std::size_t>& train_idx,
                           const std::vector<std::size_t>& test_idx, const PipelineConfig& config);

/// Deduplicate, stratified split by config.train_ratio, then prepare_split.
PreparedData prepare(const std::vector<RawRecord>& raw, const PipelineConfig& config);

std::vector<int> record_labels(const std::vector<RawRecord>& records);

/// Sidecar manifest: config, code tables, imputer/IQR/scaler state, seed and row counts.
nlohmann::json dataset_manifest(const PreparedData& data, const PipelineConfig& config);

}  // namespace kacq::dataset
