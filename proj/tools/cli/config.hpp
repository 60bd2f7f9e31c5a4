#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kacq/dataset/pipeline.hpp"
#include "kacq/models/model.hpp"
#include "kacq/train/train.hpp"

namespace kacq::cli {

/// Usage problems (bad flags, bad config keys, missing inputs); exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  std::filesystem::path data = "data/heart.csv";
  std::filesystem::path out = "results";
  std::filesystem::path checkpoint;
  std::uint64_t seed = 42;
  std::size_t threads = 1;
  std::vector<double> alphas = {0.05, 0.1, 0.2};
  std::size_t folds = 10;
  std::string metric = "accuracy";
  std::size_t explain_index = 0;
  std::size_t shapley_permutations = 1000;
  std::size_t lime_samples = 5000;
  double calibration_fraction = 0.25;
  std::vector<std::string> variants;
  std::vector<std::string> inputs;

  models::ModelSpec model;
  dataset::PipelineConfig pipeline;
  train::TrainConfig train;
  train::VqcTrainConfig vqc;

  /// Copies the root seed into every component and the quantum settings into the ansatz.
  void finalize();

  /// Sections run, data, model, variant, train, vqc; excludes `command`.
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);

  friend bool operator==(const RunConfig& a, const RunConfig& b) {
    return a.to_json() == b.to_json() && a.command == b.command;
  }
};

/// INI text with one [section] per to_json() section; lists are comma separated.
std::string to_ini(const RunConfig& config);
/// Parses INI text on top of the defaults. Unknown sections or keys and malformed values
/// throw UsageError naming the offending entry.
RunConfig parse_ini(const std::string& text);
RunConfig load_ini(const std::filesystem::path& path);

}  // namespace kacq::cli
