#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kacq/error.hpp"
#include "kacq/ndcore/optim.hpp"
#include "kacq/ndcore/rng.hpp"
#include "kacq/ndcore/tensor.hpp"

namespace kacq {

enum class Mode { Train, Infer };

class Layer;

struct ForwardContext {
  Mode mode = Mode::Infer;
  /// Source of dropout masks; required in train mode when the model has dropout.
  RngStream* rng = nullptr;
  /// Called by composite layers with every child layer and the input it receives.
  std::function<void(const Layer&, const Tensor&)> observer;
};

/// Per-layer activations retained by a train-mode forward pass.
struct LayerCache {
  virtual ~LayerCache() = default;
};
using CachePtr = std::unique_ptr<LayerCache>;

/// Forward/backward contract every layer implements. Tensors carry a leading batch axis;
/// shapes passed to output_shape() exclude it. forward() is const so a trained model can
/// serve concurrent inference; backward() accumulates into the layer's Param::grad.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string kind() const = 0;
  virtual Shape output_shape(const Shape& input) const = 0;

  /// When `cache` is non-null the layer stores what backward() needs in *cache.
  virtual Tensor forward(const Tensor& x, ForwardContext& ctx, CachePtr* cache) const = 0;
  /// Returns dL/dx and adds dL/dparams into each Param::grad.
  virtual Tensor backward(const LayerCache* cache, const Tensor& dy) = 0;

  virtual std::vector<Param*> params() { return {}; }
  std::vector<const Param*> params() const;

  /// Non-trainable state that must round-trip through checkpoints (spline grids).
  virtual nlohmann::json state() const { return nlohmann::json::object(); }
  virtual void load_state(const nlohmann::json& /*state*/) {}

  /// Direct sub-layers, for composite layers.
  virtual std::vector<Layer*> children() { return {}; }
};

/// Throws Error("<kind>: missing forward cache") when cache is null or of the wrong type.
template <typename CacheT>
const CacheT& cache_as(const LayerCache* cache, const std::string& kind) {
  const auto* c = dynamic_cast<const CacheT*>(cache);
  if (c == nullptr) throw Error(kind + ": missing forward cache");
  return *c;
}

}  // namespace kacq
