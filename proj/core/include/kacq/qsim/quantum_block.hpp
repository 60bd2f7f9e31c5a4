#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kacq/ndcore/layer.hpp"
#include "kacq/qsim/circuits.hpp"

namespace kacq::qsim {

enum class Embedding { Amplitude, Angle };

struct QuantumBlockConfig {
  std::size_t n_qubits = 4;
  std::size_t layers = 1;
  std::size_t entangle_range = 1;
  Embedding embedding = Embedding::Amplitude;
  /// RY(pi/2) on every wire after amplitude loading.
  bool ry_template = true;

  /// 2^n for amplitude embedding, n for angle embedding (RY(x_q) on wire q).
  std::size_t input_width() const noexcept;
  AnsatzSpec ansatz() const { return {AnsatzKind::SEL, n_qubits, layers, entangle_range}; }
};

/// Embedding per `config` followed by an arbitrary circuit; <Z> on every wire.
std::vector<double> evaluate_circuit(std::span<const double> inputs, const Circuit& circuit,
                                     const QuantumBlockConfig& config);
/// Parameter-shift Jacobian [n_qubits x total gate parameters], parameters in gate order.
Tensor circuit_parameter_shift(std::span<const double> inputs, const Circuit& circuit,
                               const QuantumBlockConfig& config);
/// dy^T d<Z>/dx for upstream gradient dy [n_qubits].
std::vector<double> input_vjp(std::span<const double> inputs, const Circuit& circuit,
                              const QuantumBlockConfig& config, std::span<const double> dy);

/// Embedding followed by strongly entangling layers; returns <Z> on every wire.
std::vector<double> run_quantum_block(std::span<const double> inputs, const Tensor& weights,
                                      const QuantumBlockConfig& config);

/// Jacobian d<Z_q>/dw [n_qubits x n_params] by the parameter-shift rule
/// (f(w + pi/2) - f(w - pi/2)) / 2 on every rotation angle.
Tensor parameter_shift_gradient(std::span<const double> inputs, const Tensor& weights,
                                const QuantumBlockConfig& config);

/// Jacobian d<Z_q>/dx [n_qubits x input_width]. Amplitude embedding differentiates the
/// quadratic form through the normalization; angle embedding uses parameter shifts.
Tensor input_gradient(std::span<const double> inputs, const Tensor& weights,
                      const QuantumBlockConfig& config);

/// Dressed-circuit layer: [batch x input_width] -> [batch x n_qubits].
class QuantumBlock final : public Layer {
 public:
  explicit QuantumBlock(QuantumBlockConfig config);

  std::string kind() const override { return "quantum_block"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, ForwardContext& ctx, CachePtr* cache) const override;
  Tensor backward(const LayerCache* cache, const Tensor& dy) override;
  std::vector<Param*> params() override { return {&weights_}; }
  nlohmann::json state() const override;
  void load_state(const nlohmann::json& state) override;

  /// Weights uniform in [0, 2 pi).
  void initialize(RngStream& rng);

  const QuantumBlockConfig& config() const noexcept { return config_; }
  Param& weights() noexcept { return weights_; }
  const Param& weights() const noexcept { return weights_; }
  Circuit circuit() const;

 private:
  QuantumBlockConfig config_;
  Param weights_;
};

}  // namespace kacq::qsim
