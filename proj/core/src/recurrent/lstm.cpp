#include "kacq/recurrent/lstm.hpp"

#include <cmath>

#include "kacq/error.hpp"
#include "kacq/ndcore/activation.hpp"

namespace kacq::recurrent {

LstmParams::LstmParams(std::size_t units_, std::size_t in_dim_)
    : units(units_),
      in_dim(in_dim_),
      weights("weights", Tensor({4 * units_, units_ + in_dim_})),
      bias("bias", Tensor({4 * units_})) {
  if (units_ == 0 || in_dim_ == 0) throw ParameterError("LSTM units and input size must be positive");
}

Tensor LstmParams::gate_weights(Gate g) const {
  const std::size_t cols = units + in_dim;
  Tensor w({units, cols});
  for (std::size_t r = 0; r < units; ++r)
    for (std::size_t c = 0; c < cols; ++c) w.at(r, c) = weights.value.at(g * units + r, c);
  return w;
}

Tensor LstmParams::gate_bias(Gate g) const {
  Tensor b({units});
  for (std::size_t r = 0; r < units; ++r) b[r] = bias.value[g * units + r];
  return b;
}

void LstmParams::set_gate(Gate g, const Tensor& w, const Tensor& b) {
  const std::size_t cols = units + in_dim;
  require_shape(w, {units, cols}, "LstmParams::set_gate weights");
  require_shape(b, {units}, "LstmParams::set_gate bias");
  for (std::size_t r = 0; r < units; ++r) {
    for (std::size_t c = 0; c < cols; ++c) weights.value.at(g * units + r, c) = w.at(r, c);
    bias.value[g * units + r] = b[r];
  }
}

void LstmParams::initialize(RngStream& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(units));
  for (double& v : weights.value.data()) v = rng.uniform(-bound, bound);
  bias.value.fill(0.0);
}

namespace {

std::pair<Tensor, Tensor> step_with_transposed(const LstmParams& p, const Tensor& w_t,
                                               const Tensor& x_t, const Tensor& h_prev,
                                               const Tensor& c_prev, StepCache* cache) {
  const std::size_t batch = x_t.dim(0), u = p.units, in = p.in_dim, cols = u + in;
  Tensor concat({batch, cols});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t k = 0; k < u; ++k) concat[b * cols + k] = h_prev[b * u + k];
    for (std::size_t k = 0; k < in; ++k) concat[b * cols + u + k] = x_t[b * in + k];
  }
  Tensor z({batch, 4 * u});
  gemm(batch, 4 * u, cols, concat.ptr(), w_t.ptr(), z.ptr(), false);

  Tensor f({batch, u}), i({batch, u}), g({batch, u}), o({batch, u});
  Tensor c({batch, u}), tc({batch, u}), h({batch, u});
  for (std::size_t b = 0; b < batch; ++b) {
    const double* zb = z.ptr() + b * 4 * u;
    for (std::size_t k = 0; k < u; ++k) {
      const std::size_t idx = b * u + k;
      f[idx] = sigmoid(zb[kForget * u + k] + p.bias.value[kForget * u + k]);
      i[idx] = sigmoid(zb[kInput * u + k] + p.bias.value[kInput * u + k]);
      g[idx] = std::tanh(zb[kCandidate * u + k] + p.bias.value[kCandidate * u + k]);
      o[idx] = sigmoid(zb[kOutput * u + k] + p.bias.value[kOutput * u + k]);
      c[idx] = f[idx] * c_prev[idx] + i[idx] * g[idx];
      tc[idx] = std::tanh(c[idx]);
      h[idx] = o[idx] * tc[idx];
    }
  }
  if (cache != nullptr) {
    cache->concat = std::move(concat);
    cache->forget = std::move(f);
    cache->input = std::move(i);
    cache->candidate = std::move(g);
    cache->output = std::move(o);
    cache->c_prev = c_prev;
    cache->tanh_c = std::move(tc);
  }
  return {std::move(h), std::move(c)};
}

}  // namespace

std::pair<Tensor, Tensor> lstm_step(const LstmParams& params, const Tensor& x_t,
                                    const Tensor& h_prev, const Tensor& c_prev,
                                    StepCache* cache) {
  if (x_t.rank() != 2 || x_t.dim(1) != params.in_dim) {
    throw ShapeError("lstm_step: x_t must be [batch x " + std::to_string(params.in_dim) + "]");
  }
  const Shape state{x_t.dim(0), params.units};
  require_shape(h_prev, state, "lstm_step h_prev");
  require_shape(c_prev, state, "lstm_step c_prev");
  return step_with_transposed(params, transpose(params.weights.value), x_t, h_prev, c_prev,
                              cache);
}

Lstm::Lstm(std::size_t in_dim, std::size_t units, bool return_sequences, bool reverse)
    : cell_(units, in_dim), return_sequences_(return_sequences), reverse_(reverse) {}

Shape Lstm::output_shape(const Shape& input) const {
  if (input.size() != 2 || input[1] != cell_.in_dim) {
    throw ShapeError("lstm expects [T x " + std::to_string(cell_.in_dim) + "], got " +
                     shape_string(input));
  }
  if (input[0] == 0) throw ShapeError("lstm: empty sequence");
  if (return_sequences_) return {input[0], cell_.units};
  return {cell_.units};
}

Tensor Lstm::run(const Tensor& x, std::vector<StepCache>* steps) const {
  if (x.rank() != 3 || x.dim(2) != cell_.in_dim) {
    throw ShapeError("lstm: bad input shape " + shape_string(x.shape()));
  }
  const std::size_t batch = x.dim(0), len = x.dim(1), in = cell_.in_dim, u = cell_.units;
  if (len == 0) throw ShapeError("lstm: empty sequence");
  const Tensor w_t = transpose(cell_.weights.value);
  Tensor h({batch, u}), c({batch, u});
  Tensor seq({batch, len, u});
  if (steps != nullptr) steps->assign(len, StepCache{});
  Tensor x_t({batch, in});
  for (std::size_t s = 0; s < len; ++s) {
    const std::size_t t = reverse_ ? len - 1 - s : s;
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t k = 0; k < in; ++k) x_t[b * in + k] = x.at(b, t, k);
    auto [h_next, c_next] =
        step_with_transposed(cell_, w_t, x_t, h, c, steps != nullptr ? &(*steps)[s] : nullptr);
    h = std::move(h_next);
    c = std::move(c_next);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t k = 0; k < u; ++k) seq.at(b, t, k) = h[b * u + k];
  }
  return seq;
}

namespace {

struct LstmCache final : LayerCache {
  Shape input_shape;
  std::vector<StepCache> steps;
};

}  // namespace

Tensor Lstm::forward(const Tensor& x, ForwardContext& /*ctx*/, CachePtr* cache) const {
  std::unique_ptr<LstmCache> c;
  if (cache != nullptr) {
    c = std::make_unique<LstmCache>();
    c->input_shape = x.shape();
  }
  Tensor seq = run(x, c ? &c->steps : nullptr);
  if (cache != nullptr) *cache = std::move(c);
  if (return_sequences_) return seq;
  const std::size_t batch = x.dim(0), len = x.dim(1), u = cell_.units;
  const std::size_t last = reverse_ ? 0 : len - 1;
  Tensor out({batch, u});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t k = 0; k < u; ++k) out[b * u + k] = seq.at(b, last, k);
  return out;
}

Tensor Lstm::backward_sequence(const std::vector<StepCache>& steps, const Tensor& dh_seq) {
  const std::size_t len = steps.size();
  if (len == 0) throw Error(kind() + ": missing forward cache");
  const std::size_t batch = dh_seq.dim(0), u = cell_.units, in = cell_.in_dim, cols = u + in;
  Tensor dx({batch, len, in});
  Tensor dh_next({batch, u}), dc_next({batch, u});
  Tensor dz({batch, 4 * u});
  const Tensor& w = cell_.weights.value;
  for (std::size_t s = len; s-- > 0;) {
    const std::size_t t = reverse_ ? len - 1 - s : s;
    const StepCache& sc = steps[s];
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t k = 0; k < u; ++k) {
        const std::size_t idx = b * u + k;
        const double dh = dh_seq.at(b, t, k) + dh_next[idx];
        const double o = sc.output[idx], tc = sc.tanh_c[idx];
        const double f = sc.forget[idx], i = sc.input[idx], g = sc.candidate[idx];
        const double dc = dc_next[idx] + dh * o * (1.0 - tc * tc);
        double* dzb = dz.ptr() + b * 4 * u;
        dzb[kForget * u + k] = dc * sc.c_prev[idx] * f * (1.0 - f);
        dzb[kInput * u + k] = dc * g * i * (1.0 - i);
        dzb[kCandidate * u + k] = dc * i * (1.0 - g * g);
        dzb[kOutput * u + k] = dh * tc * o * (1.0 - o);
        dc_next[idx] = dc * f;
      }
    }
    // dW += dz^T concat ; db += sum_b dz ; dconcat = dz W
    gemm_at(4 * u, cols, batch, dz.ptr(), sc.concat.ptr(), cell_.weights.grad.ptr(), true);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t r = 0; r < 4 * u; ++r) cell_.bias.grad[r] += dz[b * 4 * u + r];
    Tensor dconcat({batch, cols});
    gemm(batch, cols, 4 * u, dz.ptr(), w.ptr(), dconcat.ptr(), false);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t k = 0; k < u; ++k) dh_next[b * u + k] = dconcat[b * cols + k];
      for (std::size_t k = 0; k < in; ++k) dx.at(b, t, k) = dconcat[b * cols + u + k];
    }
  }
  return dx;
}

Tensor Lstm::backward(const LayerCache* cache, const Tensor& dy) {
  const auto& c = cache_as<LstmCache>(cache, kind());
  const std::size_t batch = c.input_shape[0], len = c.input_shape[1], u = cell_.units;
  if (return_sequences_) {
    require_shape(dy, {batch, len, u}, "lstm backward");
    return backward_sequence(c.steps, dy);
  }
  require_shape(dy, {batch, u}, "lstm backward");
  Tensor dh_seq({batch, len, u});
  const std::size_t last = reverse_ ? 0 : len - 1;
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t k = 0; k < u; ++k) dh_seq.at(b, last, k) = dy[b * u + k];
  return backward_sequence(c.steps, dh_seq);
}

BiLstm::BiLstm(std::size_t in_dim, std::size_t units, bool return_sequences)
    : fwd_(in_dim, units, true, false),
      bwd_(in_dim, units, true, true),
      return_sequences_(return_sequences) {}

Shape BiLstm::output_shape(const Shape& input) const {
  const Shape half = fwd_.output_shape(input);
  if (return_sequences_) return {half[0], 2 * half[1]};
  return {2 * half[1]};
}

std::vector<Param*> BiLstm::params() {
  auto p = fwd_.params();
  for (Param* q : bwd_.params()) p.push_back(q);
  return p;
}

namespace {

struct BiLstmCache final : LayerCache {
  Shape input_shape;
  std::vector<StepCache> fwd;
  std::vector<StepCache> bwd;
};

}  // namespace

Tensor BiLstm::forward(const Tensor& x, ForwardContext& /*ctx*/, CachePtr* cache) const {
  std::unique_ptr<BiLstmCache> c;
  if (cache != nullptr) {
    c = std::make_unique<BiLstmCache>();
    c->input_shape = x.shape();
  }
  const Tensor hf = fwd_.run(x, c ? &c->fwd : nullptr);
  const Tensor hb = bwd_.run(x, c ? &c->bwd : nullptr);
  if (cache != nullptr) *cache = std::move(c);
  const std::size_t batch = x.dim(0), len = x.dim(1), u = fwd_.units();
  if (return_sequences_) {
    Tensor out({batch, len, 2 * u});
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t t = 0; t < len; ++t)
        for (std::size_t k = 0; k < u; ++k) {
          out.at(b, t, k) = hf.at(b, t, k);
          out.at(b, t, u + k) = hb.at(b, t, k);
        }
    return out;
  }
  Tensor out({batch, 2 * u});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t k = 0; k < u; ++k) {
      out.at(b, k) = hf.at(b, len - 1, k);
      out.at(b, u + k) = hb.at(b, 0, k);
    }
  return out;
}

Tensor BiLstm::backward(const LayerCache* cache, const Tensor& dy) {
  const auto& c = cache_as<BiLstmCache>(cache, kind());
  const std::size_t batch = c.input_shape[0], len = c.input_shape[1], u = fwd_.units();
  Tensor df({batch, len, u}), db({batch, len, u});
  if (return_sequences_) {
    require_shape(dy, {batch, len, 2 * u}, "bilstm backward");
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t t = 0; t < len; ++t)
        for (std::size_t k = 0; k < u; ++k) {
          df.at(b, t, k) = dy.at(b, t, k);
          db.at(b, t, k) = dy.at(b, t, u + k);
        }
  } else {
    require_shape(dy, {batch, 2 * u}, "bilstm backward");
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t k = 0; k < u; ++k) {
        df.at(b, len - 1, k) = dy.at(b, k);
        db.at(b, 0, k) = dy.at(b, u + k);
      }
  }
  Tensor dx = fwd_.backward_sequence(c.fwd, df);
  axpy(1.0, bwd_.backward_sequence(c.bwd, db), dx);
  return dx;
}

}  // namespace kacq::recurrent
