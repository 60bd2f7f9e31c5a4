#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "kacq/dataset/features.hpp"
#include "kacq/models/loss.hpp"
#include "kacq/models/model.hpp"

namespace kacq::train {

using models::bce_loss;
using models::LossValue;
using models::square_loss;

/// Samples [n x features] with 0/1 labels.
struct LabeledData {
  Tensor x;
  std::vector<int> y;

  static LabeledData from(const dataset::FeatureMatrix& m);
  std::size_t size() const noexcept { return y.size(); }
  LabeledData subset(const std::vector<std::size_t>& rows) const;
};

struct TrainConfig {
  std::size_t max_epochs = 100;
  double learning_rate = 0.001;
  std::size_t batch_size = 32;
  double lr_factor = 0.5;
  std::size_t lr_patience = 5;
  std::size_t early_stop_patience = 10;
  std::uint64_t seed = 42;
  /// Fraction of the training set held out for validation when none is given.
  double validation_fraction = 0.2;
  /// Refit KAN grids to the observed activation range before every epoch.
  bool grid_updates = true;
  std::size_t grid_probe_rows = 256;
  /// Adds wall-clock seconds to the History JSON (breaks bitwise reproducibility).
  bool record_wall_clock = false;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct EpochRecord {
  std::size_t epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  bool improved = false;    // new best val accuracy, weights snapshotted
  bool lr_reduced = false;  // best weights restored and lr scaled after this epoch
  bool grid_updated = false;
};

struct History {
  std::vector<EpochRecord> epochs;
  std::optional<std::size_t> best_epoch;
  bool stopped_early = false;
  double wall_seconds = 0.0;

  std::vector<double> learning_rates() const;
  nlohmann::json to_json(bool include_wall_clock = false) const;
  void write_csv(std::ostream& out) const;
};

/// Mean loss and accuracy in inference mode.
std::pair<double, double> evaluate_loss(const models::Model& model, const LabeledData& data);

/// Per-epoch hook; returning false stops training after that epoch.
using EpochCallback = std::function<bool(const EpochRecord&, const models::Model&)>;

/// Mini-batch Adam with BCE. After each epoch: snapshot on improved val accuracy; after
/// lr_patience epochs without val-loss improvement restore the best snapshot and scale
/// the rate by lr_factor; stop after early_stop_patience such epochs. The model is left
/// holding the snapshot with the best val accuracy. Without `val`, a stratified split of
/// `train` is held out.
History fit(models::Model& model, const LabeledData& train, std::optional<LabeledData> val,
            const TrainConfig& config, const EpochCallback& callback = {});

/// Fits every KAN layer's grid to the activations it receives on `probe`. Returns the
/// indices (into model.params()) of coefficient tensors that were resized.
std::vector<std::size_t> update_kan_grids(models::Model& model, const Tensor& probe);

enum class VqcOptimizer { Nesterov, Adam };

struct VqcTrainConfig {
  std::size_t steps = 100;
  double learning_rate = 0.05;
  VqcOptimizer optimizer = VqcOptimizer::Adam;
  double momentum = 0.9;
};

/// Full-batch square-loss training of a VQC model. Returns the loss before each step
/// followed by the final loss (steps + 1 values).
std::vector<double> train_vqc(models::Model& model, const LabeledData& data,
                              const VqcTrainConfig& config);

}  // namespace kacq::train
