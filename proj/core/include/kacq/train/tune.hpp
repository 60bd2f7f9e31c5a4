#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "kacq/models/model.hpp"
#include "kacq/train/train.hpp"

namespace kacq::train {

/// Inclusive integer grid lo, lo + step, ..., <= hi.
struct IntRange {
  std::size_t lo = 1;
  std::size_t hi = 1;
  std::size_t step = 1;

  std::vector<std::size_t> values() const;
};

struct SearchSpace {
  /// Hyperparameter name (as in the Hyperparams JSON) and its grid.
  std::vector<std::pair<std::string, IntRange>> dims;

  std::size_t size() const;
  /// The search ranges used for each architecture: LSTM 32..128/32, dense 128..512/64,
  /// DenseKAN 32..256/32, conv filters 32..128/32, QDense 16..256/32.
  static SearchSpace defaults(models::ModelKind kind);
};

void set_hyperparam(models::Hyperparams& hp, const std::string& name, std::size_t value);
std::size_t get_hyperparam(const models::Hyperparams& hp, const std::string& name);

struct TuneConfig {
  std::size_t trials = 9;
  std::vector<std::size_t> rung_epochs = {3, 10};
  /// Fraction of trials promoted from one rung to the next (at least one).
  double keep_fraction = 1.0 / 3.0;
  std::uint64_t seed = 42;
};

/// Scores a configuration trained for `epochs`; higher is better.
using TrialEvaluator =
    std::function<double(const models::Hyperparams& hp, std::size_t epochs, std::size_t trial)>;

struct TrialRecord {
  std::size_t trial = 0;
  std::size_t rung = 0;
  std::size_t epochs = 0;
  models::Hyperparams hp;
  double score = 0.0;
};

struct TuneResult {
  models::Hyperparams best;
  double best_score = 0.0;
  std::vector<TrialRecord> log;

  nlohmann::json to_json() const;
};

/// Distinct configurations drawn uniformly from the space (all of them when the space
/// has at most `count` points), applied on top of `base`.
std::vector<models::Hyperparams> sample_configurations(const models::Hyperparams& base,
                                                       const SearchSpace& space, std::size_t count,
                                                       std::uint64_t seed);

/// Successive halving: every sampled configuration is scored at the first rung, the top
/// keep_fraction advance to the next rung, and the best score at the last rung wins.
/// Ties go to the lower trial index.
TuneResult tune(const models::Hyperparams& base, const SearchSpace& space, const TuneConfig& config,
                const TrialEvaluator& evaluator);

/// Evaluator that fits a fresh model for the given epochs (early-stop patience 3) and
/// returns its best validation accuracy.
TrialEvaluator fit_evaluator(const models::ModelSpec& spec, LabeledData train, LabeledData val,
                             const TrainConfig& config);

}  // namespace kacq::train
