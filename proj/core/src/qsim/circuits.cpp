#include "kacq/qsim/circuits.hpp"

#include <bit>

#include "kacq/error.hpp"

namespace kacq::qsim {

std::string to_string(AnsatzKind kind) {
  switch (kind) {
    case AnsatzKind::SEL: return "sel";
    case AnsatzKind::MERA: return "mera";
    case AnsatzKind::MPS: return "mps";
    case AnsatzKind::TTN: return "ttn";
  }
  return "?";
}

AnsatzKind ansatz_from_string(std::string_view name) {
  if (name == "sel") return AnsatzKind::SEL;
  if (name == "mera") return AnsatzKind::MERA;
  if (name == "mps") return AnsatzKind::MPS;
  if (name == "ttn") return AnsatzKind::TTN;
  throw ParameterError("unknown ansatz '" + std::string(name) + "' (expected sel, mera, mps, ttn)");
}

namespace {

void check_spec(const AnsatzSpec& spec) {
  if (spec.n_qubits == 0) throw ParameterError("ansatz: n_qubits must be positive");
  if (spec.kind == AnsatzKind::SEL) {
    if (spec.n_qubits > 1 && spec.entangle_range % spec.n_qubits == 0) {
      throw ParameterError("SEL: entangle_range must not be a multiple of n_qubits");
    }
    return;
  }
  if (spec.n_qubits < 2) throw ParameterError(to_string(spec.kind) + ": needs at least 2 qubits");
  if ((spec.kind == AnsatzKind::TTN || spec.kind == AnsatzKind::MERA) &&
      !std::has_single_bit(spec.n_qubits)) {
    throw ParameterError(to_string(spec.kind) + ": n_qubits must be a power of 2");
  }
}

// Bottom-up tree over `active` wires; each block folds the second wire into the first so
// the root lands on wire 0 (the readout wire).
void tree_blocks(std::vector<std::size_t> active, bool disentangle,
                 std::vector<std::pair<std::size_t, std::size_t>>& out) {
  while (active.size() > 1) {
    if (disentangle && active.size() >= 4) {
      for (std::size_t k = 1; k + 1 < active.size(); k += 2) out.emplace_back(active[k], active[k + 1]);
    }
    std::vector<std::size_t> next;
    for (std::size_t k = 0; k + 1 < active.size(); k += 2) {
      out.emplace_back(active[k], active[k + 1]);
      next.push_back(active[k]);
    }
    active = std::move(next);
  }
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> ansatz_blocks(const AnsatzSpec& spec) {
  check_spec(spec);
  std::vector<std::pair<std::size_t, std::size_t>> blocks;
  const std::size_t n = spec.n_qubits;
  switch (spec.kind) {
    case AnsatzKind::SEL:
      throw ParameterError("ansatz_blocks: SEL has no two-qubit blocks");
    case AnsatzKind::MPS:
      // The chain is walked toward wire 0 so it terminates on the readout wire.
      for (std::size_t k = n - 1; k > 0; --k) blocks.emplace_back(k - 1, k);
      break;
    case AnsatzKind::TTN:
    case AnsatzKind::MERA: {
      std::vector<std::size_t> wires(n);
      for (std::size_t q = 0; q < n; ++q) wires[q] = q;
      tree_blocks(std::move(wires), spec.kind == AnsatzKind::MERA, blocks);
      break;
    }
  }
  return blocks;
}

Shape ansatz_param_shape(const AnsatzSpec& spec) {
  check_spec(spec);
  if (spec.kind == AnsatzKind::SEL) return {spec.layers, spec.n_qubits, 3};
  return {spec.layers, 2 * ansatz_blocks(spec).size()};
}

std::size_t ansatz_param_count(const AnsatzSpec& spec) {
  return shape_size(ansatz_param_shape(spec));
}

Circuit sel_gates(const Tensor& weights, std::size_t n_qubits, std::size_t entangle_range) {
  if (weights.rank() != 3 || weights.dim(1) != n_qubits || weights.dim(2) != 3) {
    throw ShapeError("sel: weights must be [L x " + std::to_string(n_qubits) + " x 3], got " +
                     shape_string(weights.shape()));
  }
  check_spec({AnsatzKind::SEL, n_qubits, weights.dim(0), entangle_range});
  Circuit c;
  for (std::size_t l = 0; l < weights.dim(0); ++l) {
    for (std::size_t q = 0; q < n_qubits; ++q) {
      c.push_back(GateOp::u3(q, weights.at(l, q, 0), weights.at(l, q, 1), weights.at(l, q, 2)));
    }
    if (n_qubits > 1) {
      for (std::size_t q = 0; q < n_qubits; ++q) {
        c.push_back(GateOp::cnot(q, (q + entangle_range) % n_qubits));
      }
    }
  }
  return c;
}

void sel_circuit(Statevector& state, const Tensor& weights, std::size_t entangle_range) {
  apply_circuit(state, sel_gates(weights, state.n_qubits(), entangle_range));
}

Circuit ansatz_gates(const AnsatzSpec& spec, std::span<const double> params) {
  const Shape shape = ansatz_param_shape(spec);
  if (params.size() != shape_size(shape)) {
    throw ShapeError(to_string(spec.kind) + ": expected " + std::to_string(shape_size(shape)) +
                     " parameters, got " + std::to_string(params.size()));
  }
  if (spec.kind == AnsatzKind::SEL) {
    Tensor w(shape, std::vector<double>(params.begin(), params.end()));
    return sel_gates(w, spec.n_qubits, spec.entangle_range);
  }
  const auto blocks = ansatz_blocks(spec);
  Circuit c;
  std::size_t p = 0;
  for (std::size_t l = 0; l < spec.layers; ++l) {
    for (const auto& [keep, other] : blocks) {
      c.push_back(GateOp::ry(keep, params[p++]));
      c.push_back(GateOp::ry(other, params[p++]));
      c.push_back(GateOp::cnot(other, keep));
    }
  }
  return c;
}

void ansatz_circuit(Statevector& state, const AnsatzSpec& spec, std::span<const double> params) {
  if (state.n_qubits() != spec.n_qubits) throw ShapeError("ansatz: state qubit count mismatch");
  apply_circuit(state, ansatz_gates(spec, params));
}

}  // namespace kacq::qsim
