#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "kacq/ndcore/tensor.hpp"
#include "kacq/qsim/statevector.hpp"

namespace kacq::qsim {

enum class AnsatzKind { SEL, MERA, MPS, TTN };

std::string to_string(AnsatzKind kind);
AnsatzKind ansatz_from_string(std::string_view name);

struct AnsatzSpec {
  AnsatzKind kind = AnsatzKind::SEL;
  std::size_t n_qubits = 4;
  std::size_t layers = 1;
  /// CNOT ring offset r, SEL only.
  std::size_t entangle_range = 1;

  friend bool operator==(const AnsatzSpec&, const AnsatzSpec&) = default;
};

/// SEL: [L x n x 3]. MERA/MPS/TTN: [L x 2*blocks], one RY angle per wire of each block.
Shape ansatz_param_shape(const AnsatzSpec& spec);
std::size_t ansatz_param_count(const AnsatzSpec& spec);
/// Two-qubit blocks (kept wire, other wire) of one tensor-network layer in application
/// order. Throws ParameterError for SEL.
std::vector<std::pair<std::size_t, std::size_t>> ansatz_blocks(const AnsatzSpec& spec);

/// Strongly entangling layers: per layer, U3(w[l,q,:]) on every qubit q, then
/// CNOT(q, (q + r) mod n) for q = 0..n-1.
Circuit sel_gates(const Tensor& weights, std::size_t n_qubits, std::size_t entangle_range);
void sel_circuit(Statevector& state, const Tensor& weights, std::size_t entangle_range);

/// Gate list for any ansatz kind; params are read in row-major order of
/// ansatz_param_shape(spec).
Circuit ansatz_gates(const AnsatzSpec& spec, std::span<const double> params);
void ansatz_circuit(Statevector& state, const AnsatzSpec& spec, std::span<const double> params);

}  // namespace kacq::qsim
