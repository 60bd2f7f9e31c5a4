#include "kacq/qsim/quantum_block.hpp"

#include <cmath>
#include <numbers>

#include "kacq/error.hpp"

namespace kacq::qsim {

std::size_t QuantumBlockConfig::input_width() const noexcept {
  return embedding == Embedding::Amplitude ? std::size_t{1} << n_qubits : n_qubits;
}

namespace {

constexpr double kShift = std::numbers::pi / 2;

Statevector embed(std::span<const double> inputs, const QuantumBlockConfig& config) {
  if (config.embedding == Embedding::Amplitude) {
    return amplitude_embed(inputs, config.n_qubits, {config.ry_template});
  }
  if (inputs.size() != config.n_qubits) {
    throw ShapeError("angle embedding: expected " + std::to_string(config.n_qubits) +
                     " inputs, got " + std::to_string(inputs.size()));
  }
  Statevector s(config.n_qubits);
  for (std::size_t q = 0; q < config.n_qubits; ++q) apply_single(s, q, ry_matrix(inputs[q]));
  return s;
}

void check_weights(const Tensor& weights, const QuantumBlockConfig& config) {
  require_shape(weights, ansatz_param_shape(config.ansatz()), "quantum block weights");
}

}  // namespace

std::vector<double> evaluate_circuit(std::span<const double> inputs, const Circuit& circuit,
                                     const QuantumBlockConfig& config) {
  Statevector s = embed(inputs, config);
  apply_circuit(s, circuit);
  return expval_z_all(s);
}

Tensor circuit_parameter_shift(std::span<const double> inputs, const Circuit& circuit,
                               const QuantumBlockConfig& config) {
  std::size_t n_par = 0;
  for (const GateOp& g : circuit) n_par += parameter_count(g.kind);
  Tensor jac({config.n_qubits, n_par});
  Circuit shifted = circuit;
  std::size_t p = 0;
  for (GateOp& gate : shifted) {
    for (std::size_t slot = 0; slot < parameter_count(gate.kind); ++slot, ++p) {
      const double original = gate.params[slot];
      gate.params[slot] = original + kShift;
      const auto plus = evaluate_circuit(inputs, shifted, config);
      gate.params[slot] = original - kShift;
      const auto minus = evaluate_circuit(inputs, shifted, config);
      gate.params[slot] = original;
      for (std::size_t o = 0; o < config.n_qubits; ++o) jac.at(o, p) = 0.5 * (plus[o] - minus[o]);
    }
  }
  return jac;
}

std::vector<double> run_quantum_block(std::span<const double> inputs, const Tensor& weights,
                                      const QuantumBlockConfig& config) {
  check_weights(weights, config);
  return evaluate_circuit(inputs, sel_gates(weights, config.n_qubits, config.entangle_range), config);
}

Tensor parameter_shift_gradient(std::span<const double> inputs, const Tensor& weights,
                                const QuantumBlockConfig& config) {
  check_weights(weights, config);
  return circuit_parameter_shift(
      inputs, sel_gates(weights, config.n_qubits, config.entangle_range), config);
}

namespace {

// Vector-Jacobian product dy^T (d<Z>/dx) for amplitude embedding. With psi = T xhat
// (T the optional RY template) and U the ansatz, <Z_q> = xhat^T Re(T^T U^dag Z_q U T) xhat,
// so d/dxhat = 2 Re(T^dag U^dag D U T xhat) with D = sum_q dy_q Z_q, followed by the
// normalization Jacobian (I - xhat xhat^T) / |x|.
std::vector<double> amplitude_vjp(std::span<const double> inputs, const Circuit& circuit,
                                  const QuantumBlockConfig& config, std::span<const double> dy,
                                  std::vector<double>* values) {
  const std::size_t n = config.n_qubits;
  Statevector s = amplitude_embed(inputs, n, {config.ry_template});
  apply_circuit(s, circuit);
  const auto z = expval_z_all(s);
  if (values != nullptr) *values = z;
  double weighted = 0.0;
  for (std::size_t q = 0; q < n; ++q) weighted += dy[q] * z[q];
  auto amps = s.amplitudes();
  for (std::size_t i = 0; i < amps.size(); ++i) {
    double d = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
      d += ((i >> (n - 1 - q)) & 1U) == 0 ? dy[q] : -dy[q];
    }
    amps[i] *= d;
  }
  apply_circuit_adjoint(s, circuit);
  if (config.ry_template) {
    const Matrix2 inv = adjoint(ry_matrix(kShift));
    for (std::size_t q = 0; q < n; ++q) apply_single(s, q, inv);
  }
  double norm2 = 0.0;
  for (double v : inputs) norm2 += v * v;
  const double norm = std::sqrt(norm2);
  std::vector<double> dx(inputs.size());
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    const double xhat = inputs[j] / norm;
    dx[j] = 2.0 * (s[j].real() - weighted * xhat) / norm;
  }
  return dx;
}

std::vector<double> angle_vjp(std::span<const double> inputs, const Circuit& circuit,
                              const QuantumBlockConfig& config, std::span<const double> dy) {
  std::vector<double> shifted(inputs.begin(), inputs.end());
  std::vector<double> dx(inputs.size());
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    shifted[j] = inputs[j] + kShift;
    const auto plus = evaluate_circuit(shifted, circuit, config);
    shifted[j] = inputs[j] - kShift;
    const auto minus = evaluate_circuit(shifted, circuit, config);
    shifted[j] = inputs[j];
    double g = 0.0;
    for (std::size_t q = 0; q < dy.size(); ++q) g += dy[q] * 0.5 * (plus[q] - minus[q]);
    dx[j] = g;
  }
  return dx;
}

}  // namespace

std::vector<double> input_vjp(std::span<const double> inputs, const Circuit& circuit,
                              const QuantumBlockConfig& config, std::span<const double> dy) {
  if (config.embedding == Embedding::Amplitude) {
    return amplitude_vjp(inputs, circuit, config, dy, nullptr);
  }
  return angle_vjp(inputs, circuit, config, dy);
}

Tensor input_gradient(std::span<const double> inputs, const Tensor& weights,
                      const QuantumBlockConfig& config) {
  check_weights(weights, config);
  const Circuit circuit = sel_gates(weights, config.n_qubits, config.entangle_range);
  Tensor jac({config.n_qubits, inputs.size()});
  std::vector<double> dy(config.n_qubits, 0.0);
  for (std::size_t q = 0; q < config.n_qubits; ++q) {
    dy.assign(config.n_qubits, 0.0);
    dy[q] = 1.0;
    const auto row = input_vjp(inputs, circuit, config, dy);
    for (std::size_t j = 0; j < row.size(); ++j) jac.at(q, j) = row[j];
  }
  return jac;
}

QuantumBlock::QuantumBlock(QuantumBlockConfig config)
    : config_(config), weights_("weights", Tensor(ansatz_param_shape(config.ansatz()))) {}

Shape QuantumBlock::output_shape(const Shape& input) const {
  if (input.size() != 1 || input[0] != config_.input_width()) {
    throw ShapeError("quantum_block expects [" + std::to_string(config_.input_width()) +
                     "], got " + shape_string(input));
  }
  return {config_.n_qubits};
}

void QuantumBlock::initialize(RngStream& rng) {
  for (double& w : weights_.value.data()) w = rng.uniform(0.0, 2.0 * std::numbers::pi);
}

Circuit QuantumBlock::circuit() const {
  return sel_gates(weights_.value, config_.n_qubits, config_.entangle_range);
}

namespace {

struct QuantumCache final : LayerCache {
  Tensor input;
};

}  // namespace

Tensor QuantumBlock::forward(const Tensor& x, ForwardContext& /*ctx*/, CachePtr* cache) const {
  const std::size_t width = config_.input_width();
  if (x.rank() != 2 || x.dim(1) != width) {
    throw ShapeError("quantum_block: expected [batch x " + std::to_string(width) + "], got " +
                     shape_string(x.shape()));
  }
  const Circuit c = circuit();
  const std::size_t batch = x.dim(0), n = config_.n_qubits;
  Tensor out({batch, n});
  for (std::size_t b = 0; b < batch; ++b) {
    const auto z = evaluate_circuit(x.row(b), c, config_);
    for (std::size_t q = 0; q < n; ++q) out.at(b, q) = z[q];
  }
  if (cache != nullptr) {
    auto qc = std::make_unique<QuantumCache>();
    qc->input = x;
    *cache = std::move(qc);
  }
  return out;
}

Tensor QuantumBlock::backward(const LayerCache* cache, const Tensor& dy) {
  const auto& c = cache_as<QuantumCache>(cache, kind());
  const std::size_t batch = c.input.dim(0), n = config_.n_qubits;
  require_shape(dy, {batch, n}, "quantum_block backward");
  const Circuit circ = circuit();
  Tensor dx(c.input.shape());
  for (std::size_t b = 0; b < batch; ++b) {
    const auto row_dy = dy.row(b);
    bool all_zero = true;
    for (double v : row_dy) all_zero = all_zero && v == 0.0;
    if (all_zero) continue;
    const Tensor jac = parameter_shift_gradient(c.input.row(b), weights_.value, config_);
    for (std::size_t p = 0; p < weights_.value.size(); ++p) {
      double g = 0.0;
      for (std::size_t q = 0; q < n; ++q) g += row_dy[q] * jac.at(q, p);
      weights_.grad[p] += g;
    }
    const auto dxr = input_vjp(c.input.row(b), circ, config_, row_dy);
    std::copy(dxr.begin(), dxr.end(), dx.row(b).begin());
  }
  return dx;
}

nlohmann::json QuantumBlock::state() const {
  return {{"n_qubits", config_.n_qubits},
          {"layers", config_.layers},
          {"entangle_range", config_.entangle_range},
          {"embedding", config_.embedding == Embedding::Amplitude ? "amplitude" : "angle"},
          {"ry_template", config_.ry_template}};
}

void QuantumBlock::load_state(const nlohmann::json& state) {
  if (state.empty()) return;
  QuantumBlockConfig cfg;
  cfg.n_qubits = state.at("n_qubits").get<std::size_t>();
  cfg.layers = state.at("layers").get<std::size_t>();
  cfg.entangle_range = state.at("entangle_range").get<std::size_t>();
  cfg.embedding = state.at("embedding").get<std::string>() == "angle" ? Embedding::Angle
                                                                      : Embedding::Amplitude;
  cfg.ry_template = state.at("ry_template").get<bool>();
  if (cfg.n_qubits != config_.n_qubits || cfg.layers != config_.layers ||
      cfg.entangle_range != config_.entangle_range || cfg.embedding != config_.embedding ||
      cfg.ry_template != config_.ry_template) {
    throw SchemaError("quantum_block: checkpoint configuration does not match the model");
  }
}

}  // namespace kacq::qsim
