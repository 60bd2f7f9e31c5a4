#include "kacq/qsim/vqc.hpp"

#include <numbers>

#include "kacq/error.hpp"
#include "kacq/qsim/quantum_block.hpp"

namespace kacq::qsim {

namespace {

QuantumBlockConfig embedding_config(const AnsatzSpec& spec, bool ry_template) {
  QuantumBlockConfig c;
  c.n_qubits = spec.n_qubits;
  c.embedding = Embedding::Amplitude;
  c.ry_template = ry_template;
  return c;
}

struct VqcCache final : LayerCache {
  Tensor input;
};

}  // namespace

VqcLayer::VqcLayer(AnsatzSpec spec, std::size_t n_features, bool ry_template)
    : spec_(spec),
      n_features_(n_features),
      ry_template_(ry_template),
      weights_("weights", Tensor(ansatz_param_shape(spec))) {
  if (n_features == 0 || n_features > (std::size_t{1} << spec.n_qubits)) {
    throw ParameterError("vqc: " + std::to_string(n_features) + " features do not fit " +
                         std::to_string(spec.n_qubits) + " qubits");
  }
}

Shape VqcLayer::output_shape(const Shape& input) const {
  if (input != Shape{n_features_}) {
    throw ShapeError("vqc: expected [" + std::to_string(n_features_) + "], got " +
                     shape_string(input));
  }
  return {2};
}

void VqcLayer::initialize(RngStream& rng) {
  for (double& w : weights_.value.data()) w = rng.uniform(0.0, 2.0 * std::numbers::pi);
}

Circuit VqcLayer::circuit() const { return ansatz_gates(spec_, weights_.value.data()); }

Tensor VqcLayer::forward(const Tensor& x, ForwardContext& /*ctx*/, CachePtr* cache) const {
  if (x.rank() != 2 || x.dim(1) != n_features_) {
    throw ShapeError("vqc: expected [batch x " + std::to_string(n_features_) + "], got " +
                     shape_string(x.shape()));
  }
  const Circuit c = circuit();
  const QuantumBlockConfig cfg = embedding_config(spec_, ry_template_);
  Tensor y({x.dim(0), 2});
  for (std::size_t b = 0; b < x.dim(0); ++b) {
    const double z0 = evaluate_circuit(x.row(b), c, cfg)[0];
    y.at(b, 0) = 0.5 * (1.0 + z0);
    y.at(b, 1) = 0.5 * (1.0 - z0);
  }
  if (cache != nullptr) {
    auto vc = std::make_unique<VqcCache>();
    vc->input = x;
    *cache = std::move(vc);
  }
  return y;
}

Tensor VqcLayer::backward(const LayerCache* cache, const Tensor& dy) {
  const auto& c = cache_as<VqcCache>(cache, kind());
  const std::size_t batch = c.input.dim(0);
  require_shape(dy, {batch, 2}, "vqc backward");
  const Circuit circ = circuit();
  const QuantumBlockConfig cfg = embedding_config(spec_, ry_template_);
  Tensor dx(c.input.shape());
  std::vector<double> dz(spec_.n_qubits, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    dz[0] = 0.5 * (dy.at(b, 0) - dy.at(b, 1));
    if (dz[0] == 0.0) continue;
    const Tensor jac = circuit_parameter_shift(c.input.row(b), circ, cfg);
    for (std::size_t p = 0; p < weights_.value.size(); ++p) weights_.grad[p] += dz[0] * jac.at(0, p);
    const auto g = input_vjp(c.input.row(b), circ, cfg, dz);
    std::copy(g.begin(), g.end(), dx.row(b).begin());
  }
  return dx;
}

}  // namespace kacq::qsim
