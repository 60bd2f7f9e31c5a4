#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "kacq/models/layers.hpp"
#include "kacq/qsim/circuits.hpp"
#include "kacq/qsim/quantum_block.hpp"

namespace kacq::models {

enum class ModelKind { BilstmKannet, QdenseKannet, QcKannet, KacqDcnn, KacqMlp, Vqc, Logistic };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view name);

struct Hyperparams {
  std::size_t n_features = 12;
  std::size_t lstm_units = 64;
  std::size_t dense_units = 320;
  std::size_t kan_units_1 = 256;
  std::size_t kan_units_2 = 32;
  std::size_t qdense_units_1 = 112;
  std::size_t qdense_units_2 = 176;
  std::size_t qdense_units_out = 112;
  std::size_t conv_filters = 96;
  double dropout_rate = 0.20;
  std::size_t n_qubits = 4;
  std::size_t quantum_layers = 1;
  std::size_t entangle_range = 1;
  std::size_t grid_size = 3;
  std::size_t join_units = 64;
  /// Upper bound on KAN grid intervals after domain extension.
  std::size_t max_grid_size = 12;

  /// Throws ParameterError naming the first invalid field.
  void validate() const;
  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

void to_json(nlohmann::json& j, const Hyperparams& hp);
void from_json(const nlohmann::json& j, Hyperparams& hp);

enum class Recurrent { BiLstm2, Lstm2, BiLstm1, None };

/// Structural switches used by the ablation study.
struct Variant {
  Recurrent recurrent = Recurrent::BiLstm2;
  bool classical_kan = true;
  bool quantum_kan = true;
  bool quantum_layers = true;
  bool dropout = true;
  qsim::Embedding embedding = qsim::Embedding::Amplitude;
  bool ry_template = true;

  friend bool operator==(const Variant&, const Variant&) = default;
};

void to_json(nlohmann::json& j, const Variant& v);
void from_json(const nlohmann::json& j, Variant& v);

/// Named ablation rows: full, mlp, lstm, one_bilstm, no_bilstm, no_classical_kan,
/// no_quantum_kan, no_quantum_layers, no_dropout, angle_embedding.
struct AblationRow {
  std::string name;
  ModelKind kind;
  Variant variant;
};
std::vector<AblationRow> ablation_rows();

struct ModelSpec {
  ModelKind kind = ModelKind::KacqDcnn;
  Hyperparams hp;
  Variant variant;
  /// VQC only.
  qsim::AnsatzSpec ansatz{qsim::AnsatzKind::MPS, 4, 1, 1};

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

void to_json(nlohmann::json& j, const ModelSpec& s);
void from_json(const nlohmann::json& j, ModelSpec& s);

/// Hidden widths for the MLP version, scaled by a common factor so its parameter count is
/// within 5% of the KAN model with the same hyperparameters.
Hyperparams mlp_matched_hyperparams(const Hyperparams& hp, const Variant& variant = {});

/// Parameter values plus the non-trainable layer state (spline grids).
struct ModelState {
  std::vector<Tensor> values;
  std::vector<nlohmann::json> layer_states;
};

class Model {
 public:
  /// Builds the architecture and initializes every parameter from `seed`.
  static Model build(const ModelSpec& spec, std::uint64_t seed);

  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  const ModelSpec& spec() const noexcept { return spec_; }
  std::uint64_t seed() const noexcept { return seed_; }
  /// Per-sample input shape: [n_features x 1].
  Shape input_shape() const { return {spec_.hp.n_features, 1}; }

  /// x: [batch x n_features] or [batch x n_features x 1] -> [batch x 2].
  Tensor forward(const Tensor& x, ForwardContext& ctx, CachePtr* cache) const;
  /// Inference-mode forward in chunks.
  Tensor predict(const Tensor& x) const;
  /// Propagates dL/dprobs, accumulating parameter gradients.
  void backward(const LayerCache* cache, const Tensor& dprobs);

  std::vector<Param*> params();
  std::vector<const Param*> params() const;
  std::size_t parameter_count() const;
  void zero_grad();

  Layer& network() noexcept { return *net_; }
  const Layer& network() const noexcept { return *net_; }
  std::vector<Layer*> layers();

  ModelState snapshot() const;
  void restore(const ModelState& state);

 private:
  Model(ModelSpec spec, std::uint64_t seed, std::unique_ptr<Sequential> net);

  ModelSpec spec_;
  std::uint64_t seed_;
  std::unique_ptr<Sequential> net_;
};

/// Checkpoint directory: manifest.json (spec, seed, layer states, parameter table, extra)
/// and params.bin (tensor blobs in parameter order).
void save_checkpoint(const Model& model, const std::filesystem::path& dir,
                     const nlohmann::json& extra = nlohmann::json::object());
Model load_checkpoint(const std::filesystem::path& dir, nlohmann::json* extra = nullptr);

/// Class-1 score out1 / (out0 + out1) per row of [batch x 2].
std::vector<double> class1_scores(const Tensor& probs);
/// 1 iff the class-1 score is strictly greater than tau.
std::vector<int> predict_labels(const Tensor& probs, double tau = 0.5);
/// Qubit-0 readout probability (1 - <Z_0>) / 2 of a VQC model for one sample.
double vqc_predict(const Model& model, std::span<const double> x);

}  // namespace kacq::models
