#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "kacq/ndcore/layer.hpp"
#include "kacq/ndcore/rng.hpp"

namespace kacq::recurrent {

enum Gate : std::size_t { kForget = 0, kInput = 1, kCandidate = 2, kOutput = 3 };

/// Weights of one LSTM cell. The four gates are stacked row-wise in the order
/// forget, input, candidate, output: weights is [4*units x (units + in_dim)] acting on
/// the concatenation [h_prev ; x_t], bias is [4*units].
struct LstmParams {
  std::size_t units = 0;
  std::size_t in_dim = 0;
  Param weights;
  Param bias;

  LstmParams() = default;
  LstmParams(std::size_t units, std::size_t in_dim);

  /// Rows of `weights` belonging to gate g, as a copy [units x (units + in_dim)].
  Tensor gate_weights(Gate g) const;
  Tensor gate_bias(Gate g) const;
  void set_gate(Gate g, const Tensor& w, const Tensor& b);

  /// Uniform(-1/sqrt(units), 1/sqrt(units)) for weights, zero biases.
  void initialize(RngStream& rng);
};

struct StepCache {
  Tensor concat;     // [batch x (units + in)]
  Tensor forget;     // sigma(.)
  Tensor input;      // sigma(.)
  Tensor candidate;  // tanh(.)
  Tensor output;     // sigma(.)
  Tensor c_prev;
  Tensor tanh_c;
};

/// One time step:
///   f = sigma(W_f [h,x] + b_f), i = sigma(W_i [h,x] + b_i),
///   C = f * C_prev + i * tanh(W_C [h,x] + b_C), o = sigma(W_o [h,x] + b_o), h = o * tanh(C).
/// x_t: [batch x in], h_prev/c_prev: [batch x units]. Returns (h_t, c_t).
std::pair<Tensor, Tensor> lstm_step(const LstmParams& params, const Tensor& x_t,
                                    const Tensor& h_prev, const Tensor& c_prev,
                                    StepCache* cache = nullptr);

/// Unidirectional LSTM over [batch x T x C]. `reverse` runs right to left (outputs stay
/// aligned with input time steps). Zero initial state.
class Lstm final : public Layer {
 public:
  Lstm(std::size_t in_dim, std::size_t units, bool return_sequences, bool reverse = false);

  std::string kind() const override { return reverse_ ? "lstm_reverse" : "lstm"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, ForwardContext& ctx, CachePtr* cache) const override;
  Tensor backward(const LayerCache* cache, const Tensor& dy) override;
  std::vector<Param*> params() override { return {&cell_.weights, &cell_.bias}; }

  LstmParams& cell() noexcept { return cell_; }
  const LstmParams& cell() const noexcept { return cell_; }
  std::size_t units() const noexcept { return cell_.units; }
  bool return_sequences() const noexcept { return return_sequences_; }

  /// Full hidden-state sequence [batch x T x units] in input time order.
  Tensor run(const Tensor& x, std::vector<StepCache>* steps) const;
  /// Gradient of the loss w.r.t. the input given dL/dh_t for every step.
  Tensor backward_sequence(const std::vector<StepCache>& steps, const Tensor& dh_seq);

 private:
  LstmParams cell_;
  bool return_sequences_;
  bool reverse_;
};

/// Bidirectional wrapper: H_t = [h_fwd_t ; h_bwd_t], forward half first.
/// Without return_sequences the output is [h_fwd_{T-1} ; h_bwd_0].
class BiLstm final : public Layer {
 public:
  BiLstm(std::size_t in_dim, std::size_t units, bool return_sequences);

  std::string kind() const override { return "bilstm"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, ForwardContext& ctx, CachePtr* cache) const override;
  Tensor backward(const LayerCache* cache, const Tensor& dy) override;
  std::vector<Param*> params() override;

  Lstm& forward_cell() noexcept { return fwd_; }
  Lstm& backward_cell() noexcept { return bwd_; }
  const Lstm& forward_cell() const noexcept { return fwd_; }
  const Lstm& backward_cell() const noexcept { return bwd_; }
  std::size_t units() const noexcept { return fwd_.units(); }

 private:
  Lstm fwd_;
  Lstm bwd_;
  bool return_sequences_;
};

}  // namespace kacq::recurrent
