#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "kacq/kan/bspline.hpp"
#include "kacq/ndcore/layer.hpp"
#include "kacq/ndcore/rng.hpp"

namespace kacq::kan {

struct KanInit {
  double spline_sigma = 0.1;
};

/// out_dim x in_dim learnable edge functions
///   phi_ij(x) = w_b[i,j] * SiLU(x) + w_s[i,j] * sum_k a[i,j,k] B_k(x)
/// aggregated as y_i = sum_j phi_ij(x_j). Shared by DenseKAN and Conv1DKAN.
class EdgeFunctionBank {
 public:
  EdgeFunctionBank(std::size_t in_dim, std::size_t out_dim, SplineGrid grid);

  std::size_t in_dim() const noexcept { return in_dim_; }
  std::size_t out_dim() const noexcept { return out_dim_; }
  const SplineGrid& grid() const noexcept { return grid_; }

  /// Spline coefficients a: [out x in x basis_count].
  Param& coefficients() noexcept { return coef_; }
  const Param& coefficients() const noexcept { return coef_; }
  /// Residual SiLU weights w_b: [out x in].
  Param& base_weights() noexcept { return base_; }
  const Param& base_weights() const noexcept { return base_; }
  /// Spline scales w_s: [out x in].
  Param& spline_scales() noexcept { return scale_; }
  const Param& spline_scales() const noexcept { return scale_; }

  std::vector<Param*> params() { return {&coef_, &base_, &scale_}; }

  /// a ~ N(0, sigma^2), w_b ~ U(-1/sqrt(in), 1/sqrt(in)), w_s = 1.
  void initialize(RngStream& rng, const KanInit& init = {});

  struct Cache {
    Tensor features;     // [rows x in*(1+K)]: SiLU block then basis block
    Tensor derivatives;  // [rows x in*(1+K)]: SiLU' block then basis' block
  };

  /// x: [rows x in] -> [rows x out]
  Tensor forward(const Tensor& x, Cache* cache) const;
  /// dy: [rows x out] -> dx: [rows x in]; accumulates parameter gradients.
  Tensor backward(const Cache& cache, const Tensor& dy);

  /// Value of edge (i, j) at x; the direct formula, used by tests and grid refits.
  double edge_value(std::size_t out_index, std::size_t in_index, double x) const;

  /// Expands the domain to cover the observed activations (plus a 10% margin), snapped
  /// outward to whole knot intervals so the old knot lattice is kept. Coefficients are
  /// refit by least squares on the new basis; since the old bases are a subset of the
  /// new ones the represented functions are preserved. Never shrinks the domain.
  /// Returns true when the grid changed.
  bool update_grid(double activation_min, double activation_max, std::size_t max_grid_size);

  void set_grid(const SplineGrid& grid);

 private:
  Tensor combined_weights() const;

  std::size_t in_dim_;
  std::size_t out_dim_;
  SplineGrid grid_;
  Param coef_;
  Param base_;
  Param scale_;
};

/// Dense KAN layer applied to the last axis; leading axes are treated as batch.
class DenseKan final : public Layer {
 public:
  DenseKan(std::size_t in_dim, std::size_t out_dim, SplineGrid grid = {});

  std::string kind() const override { return "densekan"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, ForwardContext& ctx, CachePtr* cache) const override;
  Tensor backward(const LayerCache* cache, const Tensor& dy) override;
  std::vector<Param*> params() override { return bank_.params(); }
  nlohmann::json state() const override;
  void load_state(const nlohmann::json& state) override;

  EdgeFunctionBank& bank() noexcept { return bank_; }
  const EdgeFunctionBank& bank() const noexcept { return bank_; }

 private:
  EdgeFunctionBank bank_;
};

/// Valid (unpadded) 1-D convolution whose taps are KAN edge functions.
/// Input [batch x L x C] -> [batch x L' x F], L' = floor((L - K) / S) + 1.
class Conv1dKan final : public Layer {
 public:
  Conv1dKan(std::size_t in_channels, std::size_t filters, std::size_t kernel_size,
            std::size_t stride, SplineGrid grid = {});

  std::string kind() const override { return "conv1dkan"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, ForwardContext& ctx, CachePtr* cache) const override;
  Tensor backward(const LayerCache* cache, const Tensor& dy) override;
  std::vector<Param*> params() override { return bank_.params(); }
  nlohmann::json state() const override;
  void load_state(const nlohmann::json& state) override;

  std::size_t output_length(std::size_t input_length) const;
  EdgeFunctionBank& bank() noexcept { return bank_; }
  const EdgeFunctionBank& bank() const noexcept { return bank_; }

 private:
  std::size_t in_channels_;
  std::size_t filters_;
  std::size_t kernel_size_;
  std::size_t stride_;
  EdgeFunctionBank bank_;
};

/// Observed input range of a KAN layer over a probe batch.
struct ActivationRange {
  double min = 0.0;
  double max = 0.0;
};
ActivationRange activation_range(const Tensor& activations);

/// grid_update for a whole layer from a sample of its recent inputs. A degenerate sample
/// (all values equal) is a no-op.
bool grid_update(EdgeFunctionBank& bank, const Tensor& recent_inputs,
                 std::size_t max_grid_size = 12);

}  // namespace kacq::kan
