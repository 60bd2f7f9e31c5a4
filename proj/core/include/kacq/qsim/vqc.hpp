#pragma once

#include <cstddef>
#include <string>

#include "kacq/ndcore/layer.hpp"
#include "kacq/qsim/circuits.hpp"

namespace kacq::qsim {

/// Variational classifier: amplitude embedding of [batch x features] (padded to 2^n),
/// an ansatz, and qubit-0 readout p1 = (1 - <Z_0>) / 2. Output [batch x 2] = (1 - p1, p1).
class VqcLayer final : public Layer {
 public:
  VqcLayer(AnsatzSpec spec, std::size_t n_features, bool ry_template = false);

  std::string kind() const override { return "vqc"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, ForwardContext& ctx, CachePtr* cache) const override;
  Tensor backward(const LayerCache* cache, const Tensor& dy) override;
  std::vector<Param*> params() override { return {&weights_}; }

  /// Angles uniform in [0, 2 pi).
  void initialize(RngStream& rng);

  const AnsatzSpec& spec() const noexcept { return spec_; }
  Param& weights() noexcept { return weights_; }
  Circuit circuit() const;

 private:
  AnsatzSpec spec_;
  std::size_t n_features_;
  bool ry_template_;
  Param weights_;
};

}  // namespace kacq::qsim
