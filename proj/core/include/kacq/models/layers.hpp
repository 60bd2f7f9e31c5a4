#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "kacq/ndcore/activation.hpp"
#include "kacq/ndcore/layer.hpp"

namespace kacq::models {

/// Runs `layer` on x, notifying ctx.observer first.
Tensor forward_child(const Layer& layer, const Tensor& x, ForwardContext& ctx, CachePtr* cache);

/// Fully connected layer on the last axis: y = act(x W + b), W [in x out].
class Dense final : public Layer {
 public:
  Dense(std::size_t in_dim, std::size_t out_dim, Activation act = Activation::Identity);

  std::string kind() const override { return "dense"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, ForwardContext& ctx, CachePtr* cache) const override;
  Tensor backward(const LayerCache* cache, const Tensor& dy) override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }
  nlohmann::json state() const override { return {{"activation", to_string(act_)}}; }

  /// Glorot uniform weights, zero bias.
  void initialize(RngStream& rng);

  Param& weight() noexcept { return weight_; }
  Param& bias() noexcept { return bias_; }
  Activation activation_kind() const noexcept { return act_; }

 private:
  std::size_t in_dim_;
  std::size_t out_dim_;
  Activation act_;
  Param weight_;
  Param bias_;
};

/// Inverted dropout: in train mode each unit is zeroed with probability `rate` and the
/// survivors are scaled by 1 / (1 - rate); identity at inference.
class Dropout final : public Layer {
 public:
  explicit Dropout(double rate);

  std::string kind() const override { return "dropout"; }
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor forward(const Tensor& x, ForwardContext& ctx, CachePtr* cache) const override;
  Tensor backward(const LayerCache* cache, const Tensor& dy) override;
  double rate() const noexcept { return rate_; }

 private:
  double rate_;
};

/// [batch x d1 x ... ] -> [batch x (d1 * ...)]
class Flatten final : public Layer {
 public:
  std::string kind() const override { return "flatten"; }
  Shape output_shape(const Shape& input) const override { return {shape_size(input)}; }
  Tensor forward(const Tensor& x, ForwardContext& ctx, CachePtr* cache) const override;
  Tensor backward(const LayerCache* cache, const Tensor& dy) override;
};

/// [batch x 1] probability p -> [batch x 2] = (1 - p, p).
class Complement final : public Layer {
 public:
  std::string kind() const override { return "complement"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, ForwardContext& ctx, CachePtr* cache) const override;
  Tensor backward(const LayerCache* cache, const Tensor& dy) override;
};

/// Ordered stack of layers.
class Sequential final : public Layer {
 public:
  Sequential() = default;

  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
  template <typename L, typename... Args>
  L& emplace(Args&&... args) {
    auto p = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *p;
    layers_.push_back(std::move(p));
    return ref;
  }

  std::string kind() const override { return "sequential"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, ForwardContext& ctx, CachePtr* cache) const override;
  Tensor backward(const LayerCache* cache, const Tensor& dy) override;
  std::vector<Param*> params() override;
  std::vector<Layer*> children() override;

  std::size_t size() const noexcept { return layers_.size(); }
  Layer& at(std::size_t i) { return *layers_.at(i); }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// Splits the last axis of [batch x k*w] into k equal segments, runs branch i on segment i
/// and concatenates the branch outputs.
class SplitConcat final : public Layer {
 public:
  explicit SplitConcat(std::vector<std::unique_ptr<Layer>> branches);

  std::string kind() const override { return "split_concat"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, ForwardContext& ctx, CachePtr* cache) const override;
  Tensor backward(const LayerCache* cache, const Tensor& dy) override;
  std::vector<Param*> params() override;
  std::vector<Layer*> children() override;

  std::size_t branch_count() const noexcept { return branches_.size(); }

 private:
  std::vector<std::unique_ptr<Layer>> branches_;
};

/// Two channels fed the same input; their [batch x d_i] outputs are concatenated.
class DualChannel final : public Layer {
 public:
  DualChannel(std::unique_ptr<Layer> first, std::unique_ptr<Layer> second);

  std::string kind() const override { return "dual_channel"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, ForwardContext& ctx, CachePtr* cache) const override;
  Tensor backward(const LayerCache* cache, const Tensor& dy) override;
  std::vector<Param*> params() override;
  std::vector<Layer*> children() override { return {first_.get(), second_.get()}; }

  Layer& first() noexcept { return *first_; }
  Layer& second() noexcept { return *second_; }

 private:
  std::unique_ptr<Layer> first_;
  std::unique_ptr<Layer> second_;
};

/// Every layer in the tree rooted at `root`, depth first, parents before children.
std::vector<Layer*> flatten_layers(Layer& root);

}  // namespace kacq::models
