#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace kacq::qsim {

using Complex = std::complex<double>;
/// Row-major 2x2 matrix {m00, m01, m10, m11}.
using Matrix2 = std::array<Complex, 4>;

/// n-qubit pure state. Qubit 0 is the most significant bit of the basis index, so
/// |q0 q1 ... q_{n-1}> has index q0 * 2^{n-1} + ... + q_{n-1}.
class Statevector {
 public:
  /// |0...0>
  explicit Statevector(std::size_t n_qubits);
  Statevector(std::size_t n_qubits, std::vector<Complex> amplitudes);

  std::size_t n_qubits() const noexcept { return n_qubits_; }
  std::size_t dimension() const noexcept { return amps_.size(); }
  std::span<const Complex> amplitudes() const noexcept { return amps_; }
  std::span<Complex> amplitudes() noexcept { return amps_; }
  const Complex& operator[](std::size_t i) const noexcept { return amps_[i]; }

  double norm_squared() const noexcept;

 private:
  std::size_t n_qubits_;
  std::vector<Complex> amps_;
};

enum class GateKind { RY, RZ, U3, CNOT };

struct GateOp {
  GateKind kind = GateKind::RY;
  /// One wire, or (control, target) for CNOT.
  std::vector<std::size_t> wires;
  /// RY/RZ use params[0]; U3 uses (theta, phi, lambda).
  std::array<double, 3> params{};

  static GateOp ry(std::size_t wire, double theta) { return {GateKind::RY, {wire}, {theta, 0, 0}}; }
  static GateOp rz(std::size_t wire, double phi) { return {GateKind::RZ, {wire}, {phi, 0, 0}}; }
  static GateOp u3(std::size_t wire, double theta, double phi, double lambda) {
    return {GateKind::U3, {wire}, {theta, phi, lambda}};
  }
  static GateOp cnot(std::size_t control, std::size_t target) {
    return {GateKind::CNOT, {control, target}, {}};
  }
};

std::string to_string(GateKind kind);
std::size_t parameter_count(GateKind kind) noexcept;

Matrix2 ry_matrix(double theta);
Matrix2 rz_matrix(double phi);
Matrix2 u3_matrix(double theta, double phi, double lambda);
Matrix2 adjoint(const Matrix2& m);

/// Full unitary of a gate on its own wires: 2x2 for single-qubit gates, 4x4 (control is
/// the high bit) for CNOT. Row-major.
std::vector<Complex> gate_matrix(const GateOp& gate);

void apply_single(Statevector& state, std::size_t wire, const Matrix2& m);
void apply_cnot(Statevector& state, std::size_t control, std::size_t target);
void apply_gate(Statevector& state, const GateOp& gate);
/// Applies the inverse of `gate`.
void apply_gate_adjoint(Statevector& state, const GateOp& gate);

using Circuit = std::vector<GateOp>;

void apply_circuit(Statevector& state, const Circuit& circuit);
void apply_circuit_adjoint(Statevector& state, const Circuit& circuit);

/// Dense 2^n x 2^n unitary of a circuit, built column by column.
std::vector<Complex> circuit_unitary(const Circuit& circuit, std::size_t n_qubits);

nlohmann::json circuit_to_json(const Circuit& circuit);
Circuit circuit_from_json(const nlohmann::json& j);

struct EmbeddingOptions {
  /// Apply RY(pi/2) to every qubit after loading the amplitudes.
  bool ry_template = true;
};

/// Pads `features` with zeros to 2^n and normalizes to unit length.
Statevector amplitude_embed(std::span<const double> features, std::size_t n_qubits,
                            const EmbeddingOptions& options = {});

/// sum_i |a_i|^2 * (+1 if bit(wire, i) = 0 else -1)
double expval_z(const Statevector& state, std::size_t wire);
std::vector<double> expval_z_all(const Statevector& state);

/// (P(qubit 0 = 0), P(qubit 0 = 1)).
std::pair<double, double> class_probabilities(const Statevector& state);

}  // namespace kacq::qsim
