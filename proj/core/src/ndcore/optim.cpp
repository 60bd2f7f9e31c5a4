#include "kacq/ndcore/optim.hpp"

#include <cmath>

#include "kacq/error.hpp"

namespace kacq {

namespace {

void require_pairs(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
                   const char* who) {
  if (params.size() != grads.size()) {
    throw ShapeError(std::string(who) + ": parameter/gradient count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i]->shape()) {
      throw ShapeError(std::string(who) + ": gradient " + std::to_string(i) + " has shape " +
                       shape_string(grads[i]->shape()) + ", parameter has " +
                       shape_string(params[i]->shape()));
    }
  }
}

void init_slots(std::vector<Tensor>& slots, std::span<Tensor* const> params, const char* who) {
  if (slots.empty()) {
    for (const Tensor* p : params) slots.emplace_back(p->shape());
    return;
  }
  if (slots.size() != params.size()) throw ShapeError(std::string(who) + ": state size mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (slots[i].shape() != params[i]->shape()) {
      throw ShapeError(std::string(who) + ": state for parameter " + std::to_string(i) +
                       " has shape " + shape_string(slots[i].shape()));
    }
  }
}

}  // namespace

void adam_step(AdamState& state, std::span<Tensor* const> params,
               std::span<const Tensor* const> grads) {
  require_pairs(params, grads, "adam_step");
  init_slots(state.first_moment, params, "adam_step");
  init_slots(state.second_moment, params, "adam_step");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    Tensor& m = state.first_moment[i];
    Tensor& v = state.second_moment[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p[j] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

void adam_step(AdamState& state, std::span<Param* const> params) {
  std::vector<Tensor*> values;
  std::vector<const Tensor*> grads;
  values.reserve(params.size());
  grads.reserve(params.size());
  for (Param* p : params) {
    values.push_back(&p->value);
    grads.push_back(&p->grad);
  }
  adam_step(state, values, grads);
}

void reset_moments(AdamState& state, std::size_t index, const Shape& shape) {
  if (index < state.first_moment.size()) state.first_moment[index] = Tensor(shape);
  if (index < state.second_moment.size()) state.second_moment[index] = Tensor(shape);
}

std::vector<Tensor> nesterov_lookahead(const NesterovState& state,
                                       std::span<const Tensor* const> params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor p = *params[i];
    if (i < state.velocity.size()) axpy(state.momentum, state.velocity[i], p);
    out.push_back(std::move(p));
  }
  return out;
}

void nesterov_step(NesterovState& state, std::span<Tensor* const> params,
                   std::span<const Tensor* const> grads_at_lookahead) {
  require_pairs(params, grads_at_lookahead, "nesterov_step");
  init_slots(state.velocity, params, "nesterov_step");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& v = state.velocity[i];
    Tensor& p = *params[i];
    const Tensor& g = *grads_at_lookahead[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      v[j] = state.momentum * v[j] - state.learning_rate * g[j];
      p[j] += v[j];
    }
  }
}

}  // namespace kacq
