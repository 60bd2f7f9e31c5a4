#include "kacq/qsim/statevector.hpp"

#include <cmath>
#include <numbers>

#include "kacq/error.hpp"

namespace kacq::qsim {

Statevector::Statevector(std::size_t n_qubits) : n_qubits_(n_qubits) {
  if (n_qubits == 0 || n_qubits > 24) throw ParameterError("Statevector: qubit count out of range");
  amps_.assign(std::size_t{1} << n_qubits, Complex{0.0, 0.0});
  amps_[0] = 1.0;
}

Statevector::Statevector(std::size_t n_qubits, std::vector<Complex> amplitudes)
    : n_qubits_(n_qubits), amps_(std::move(amplitudes)) {
  if (n_qubits == 0 || n_qubits > 24) throw ParameterError("Statevector: qubit count out of range");
  if (amps_.size() != (std::size_t{1} << n_qubits)) {
    throw ShapeError("Statevector: expected " + std::to_string(std::size_t{1} << n_qubits) +
                     " amplitudes, got " + std::to_string(amps_.size()));
  }
}

double Statevector::norm_squared() const noexcept {
  double s = 0.0;
  for (const Complex& a : amps_) s += std::norm(a);
  return s;
}

std::string to_string(GateKind kind) {
  switch (kind) {
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::U3: return "U3";
    case GateKind::CNOT: return "CNOT";
  }
  return "?";
}

std::size_t parameter_count(GateKind kind) noexcept {
  switch (kind) {
    case GateKind::RY:
    case GateKind::RZ: return 1;
    case GateKind::U3: return 3;
    case GateKind::CNOT: return 0;
  }
  return 0;
}

Matrix2 ry_matrix(double theta) {
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  return {Complex{c, 0}, Complex{-s, 0}, Complex{s, 0}, Complex{c, 0}};
}

Matrix2 rz_matrix(double phi) {
  return {std::polar(1.0, -phi / 2), Complex{0, 0}, Complex{0, 0}, std::polar(1.0, phi / 2)};
}

Matrix2 u3_matrix(double theta, double phi, double lambda) {
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  return {Complex{c, 0}, -std::polar(s, lambda), std::polar(s, phi), std::polar(c, phi + lambda)};
}

Matrix2 adjoint(const Matrix2& m) {
  return {std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3])};
}

namespace {

Matrix2 single_matrix(const GateOp& g) {
  switch (g.kind) {
    case GateKind::RY: return ry_matrix(g.params[0]);
    case GateKind::RZ: return rz_matrix(g.params[0]);
    case GateKind::U3: return u3_matrix(g.params[0], g.params[1], g.params[2]);
    case GateKind::CNOT: break;
  }
  throw ParameterError("single_matrix: CNOT is a two-qubit gate");
}

void check_wires(const Statevector& state, const GateOp& g) {
  const std::size_t expected = g.kind == GateKind::CNOT ? 2 : 1;
  if (g.wires.size() != expected) {
    throw ParameterError(to_string(g.kind) + ": expected " + std::to_string(expected) +
                         " wire(s)");
  }
  for (std::size_t w : g.wires) {
    if (w >= state.n_qubits()) {
      throw ParameterError(to_string(g.kind) + ": wire " + std::to_string(w) +
                           " out of range for " + std::to_string(state.n_qubits()) + " qubits");
    }
  }
  if (expected == 2 && g.wires[0] == g.wires[1]) {
    throw ParameterError("CNOT: control and target must differ");
  }
}

}  // namespace

std::vector<Complex> gate_matrix(const GateOp& gate) {
  if (gate.kind == GateKind::CNOT) {
    std::vector<Complex> m(16, Complex{0, 0});
    m[0 * 4 + 0] = 1;
    m[1 * 4 + 1] = 1;
    m[2 * 4 + 3] = 1;
    m[3 * 4 + 2] = 1;
    return m;
  }
  const Matrix2 m = single_matrix(gate);
  return {m.begin(), m.end()};
}

void apply_single(Statevector& state, std::size_t wire, const Matrix2& m) {
  if (wire >= state.n_qubits()) throw ParameterError("apply_single: wire out of range");
  const std::size_t stride = std::size_t{1} << (state.n_qubits() - 1 - wire);
  const std::size_t dim = state.dimension();
  Complex* a = state.amplitudes().data();
  for (std::size_t base = 0; base < dim; base += 2 * stride) {
    for (std::size_t i = base; i < base + stride; ++i) {
      const Complex a0 = a[i], a1 = a[i + stride];
      a[i] = m[0] * a0 + m[1] * a1;
      a[i + stride] = m[2] * a0 + m[3] * a1;
    }
  }
}

void apply_cnot(Statevector& state, std::size_t control, std::size_t target) {
  const std::size_t n = state.n_qubits();
  if (control >= n || target >= n) throw ParameterError("CNOT: wire out of range");
  if (control == target) throw ParameterError("CNOT: control and target must differ");
  const std::size_t cbit = std::size_t{1} << (n - 1 - control);
  const std::size_t tbit = std::size_t{1} << (n - 1 - target);
  Complex* a = state.amplitudes().data();
  for (std::size_t i = 0; i < state.dimension(); ++i) {
    if ((i & cbit) != 0 && (i & tbit) == 0) std::swap(a[i], a[i | tbit]);
  }
}

void apply_gate(Statevector& state, const GateOp& gate) {
  check_wires(state, gate);
  if (gate.kind == GateKind::CNOT) {
    apply_cnot(state, gate.wires[0], gate.wires[1]);
  } else {
    apply_single(state, gate.wires[0], single_matrix(gate));
  }
}

void apply_gate_adjoint(Statevector& state, const GateOp& gate) {
  check_wires(state, gate);
  if (gate.kind == GateKind::CNOT) {
    apply_cnot(state, gate.wires[0], gate.wires[1]);
  } else {
    apply_single(state, gate.wires[0], adjoint(single_matrix(gate)));
  }
}

void apply_circuit(Statevector& state, const Circuit& circuit) {
  for (const GateOp& g : circuit) apply_gate(state, g);
}

void apply_circuit_adjoint(Statevector& state, const Circuit& circuit) {
  for (auto it = circuit.rbegin(); it != circuit.rend(); ++it) apply_gate_adjoint(state, *it);
}

std::vector<Complex> circuit_unitary(const Circuit& circuit, std::size_t n_qubits) {
  const std::size_t dim = std::size_t{1} << n_qubits;
  std::vector<Complex> u(dim * dim);
  for (std::size_t col = 0; col < dim; ++col) {
    std::vector<Complex> basis(dim, Complex{0, 0});
    basis[col] = 1;
    Statevector s(n_qubits, std::move(basis));
    apply_circuit(s, circuit);
    for (std::size_t row = 0; row < dim; ++row) u[row * dim + col] = s[row];
  }
  return u;
}

nlohmann::json circuit_to_json(const Circuit& circuit) {
  nlohmann::json out = nlohmann::json::array();
  for (const GateOp& g : circuit) {
    nlohmann::json params = nlohmann::json::array();
    for (std::size_t i = 0; i < parameter_count(g.kind); ++i) params.push_back(g.params[i]);
    out.push_back({{"kind", to_string(g.kind)}, {"wires", g.wires}, {"params", params}});
  }
  return out;
}

Circuit circuit_from_json(const nlohmann::json& j) {
  Circuit c;
  for (const auto& item : j) {
    GateOp g;
    const std::string kind = item.at("kind").get<std::string>();
    if (kind == "RY") g.kind = GateKind::RY;
    else if (kind == "RZ") g.kind = GateKind::RZ;
    else if (kind == "U3") g.kind = GateKind::U3;
    else if (kind == "CNOT") g.kind = GateKind::CNOT;
    else throw ParameterError("circuit_from_json: unknown gate '" + kind + "'");
    g.wires = item.at("wires").get<std::vector<std::size_t>>();
    const auto params = item.at("params").get<std::vector<double>>();
    if (params.size() != parameter_count(g.kind)) {
      throw ParameterError("circuit_from_json: wrong parameter count for " + kind);
    }
    for (std::size_t i = 0; i < params.size(); ++i) g.params[i] = params[i];
    c.push_back(std::move(g));
  }
  return c;
}

Statevector amplitude_embed(std::span<const double> features, std::size_t n_qubits,
                            const EmbeddingOptions& options) {
  const std::size_t dim = std::size_t{1} << n_qubits;
  if (features.size() > dim) {
    throw ParameterError("amplitude_embed: " + std::to_string(features.size()) +
                         " features exceed the capacity of " + std::to_string(n_qubits) +
                         " qubits");
  }
  double norm2 = 0.0;
  for (double v : features) norm2 += v * v;
  if (!(norm2 > 0.0) || !std::isfinite(norm2)) {
    throw ParameterError("amplitude_embed: input must be a finite non-zero vector");
  }
  const double inv = 1.0 / std::sqrt(norm2);
  std::vector<Complex> amps(dim, Complex{0, 0});
  for (std::size_t i = 0; i < features.size(); ++i) amps[i] = features[i] * inv;
  Statevector s(n_qubits, std::move(amps));
  if (options.ry_template) {
    const Matrix2 ry = ry_matrix(std::numbers::pi / 2);
    for (std::size_t q = 0; q < n_qubits; ++q) apply_single(s, q, ry);
  }
  return s;
}

double expval_z(const Statevector& state, std::size_t wire) {
  if (wire >= state.n_qubits()) throw ParameterError("expval_z: wire out of range");
  const std::size_t bit = std::size_t{1} << (state.n_qubits() - 1 - wire);
  double e = 0.0;
  for (std::size_t i = 0; i < state.dimension(); ++i) {
    const double p = std::norm(state[i]);
    e += (i & bit) == 0 ? p : -p;
  }
  return e;
}

std::vector<double> expval_z_all(const Statevector& state) {
  std::vector<double> out(state.n_qubits());
  for (std::size_t q = 0; q < out.size(); ++q) out[q] = expval_z(state, q);
  return out;
}

std::pair<double, double> class_probabilities(const Statevector& state) {
  const std::size_t bit = std::size_t{1} << (state.n_qubits() - 1);
  double p0 = 0.0, p1 = 0.0;
  for (std::size_t i = 0; i < state.dimension(); ++i) {
    ((i & bit) == 0 ? p0 : p1) += std::norm(state[i]);
  }
  const double total = p0 + p1;
  return {p0 / total, p1 / total};
}

}  // namespace kacq::qsim
