#include "kacq/kan/kan_layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kacq/error.hpp"
#include "kacq/ndcore/activation.hpp"
#include "kacq/ndcore/linalg.hpp"

namespace kacq::kan {

EdgeFunctionBank::EdgeFunctionBank(std::size_t in_dim, std::size_t out_dim, SplineGrid grid)
    : in_dim_(in_dim),
      out_dim_(out_dim),
      grid_(grid),
      coef_("coef", Tensor({out_dim, in_dim, grid.basis_count()})),
      base_("base", Tensor({out_dim, in_dim})),
      scale_("scale", Tensor({out_dim, in_dim}, 1.0)) {
  if (in_dim == 0 || out_dim == 0) throw ParameterError("KAN layer dimensions must be positive");
  if (grid.grid_size == 0 || !(grid.t_max > grid.t_min)) {
    throw ParameterError("KAN spline grid must have positive size and t_max > t_min");
  }
}

void EdgeFunctionBank::initialize(RngStream& rng, const KanInit& init) {
  for (double& v : coef_.value.data()) v = rng.normal(0.0, init.spline_sigma);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim_));
  for (double& v : base_.value.data()) v = rng.uniform(-bound, bound);
  scale_.value.fill(1.0);
}

Tensor EdgeFunctionBank::combined_weights() const {
  const std::size_t n = in_dim_, m = out_dim_, nb = grid_.basis_count();
  Tensor w({n * (1 + nb), m});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      w[j * m + i] = base_.value[i * n + j];
      const double s = scale_.value[i * n + j];
      const double* a = coef_.value.ptr() + (i * n + j) * nb;
      for (std::size_t k = 0; k < nb; ++k) w[(n + j * nb + k) * m + i] = s * a[k];
    }
  }
  return w;
}

Tensor EdgeFunctionBank::forward(const Tensor& x, Cache* cache) const {
  if (x.rank() != 2 || x.dim(1) != in_dim_) {
    throw ShapeError("KAN edge bank expects [rows x " + std::to_string(in_dim_) + "], got " +
                     shape_string(x.shape()));
  }
  const std::size_t rows = x.dim(0), n = in_dim_, nb = grid_.basis_count();
  const std::size_t width = n * (1 + nb);
  Tensor features({rows, width});
  Tensor derivs;
  if (cache != nullptr) derivs = Tensor({rows, width});
  std::vector<double> basis(nb), dbasis(nb);
  for (std::size_t r = 0; r < rows; ++r) {
    double* f = features.ptr() + r * width;
    double* d = cache != nullptr ? derivs.ptr() + r * width : nullptr;
    for (std::size_t j = 0; j < n; ++j) {
      const double xv = x[r * n + j];
      f[j] = silu(xv);
      if (d != nullptr) {
        d[j] = silu_derivative(xv);
        bspline_basis_with_derivative(xv, grid_, basis, dbasis);
        std::copy(dbasis.begin(), dbasis.end(), d + n + j * nb);
      } else {
        bspline_basis(xv, grid_, basis);
      }
      std::copy(basis.begin(), basis.end(), f + n + j * nb);
    }
  }
  Tensor y({rows, out_dim_});
  const Tensor w = combined_weights();
  gemm(rows, out_dim_, width, features.ptr(), w.ptr(), y.ptr(), false);
  if (cache != nullptr) {
    cache->features = std::move(features);
    cache->derivatives = std::move(derivs);
  }
  return y;
}

Tensor EdgeFunctionBank::backward(const Cache& cache, const Tensor& dy) {
  const std::size_t n = in_dim_, m = out_dim_, nb = grid_.basis_count();
  const std::size_t width = n * (1 + nb);
  const std::size_t rows = cache.features.dim(0);
  require_shape(dy, {rows, m}, "KAN backward upstream gradient");

  Tensor dw({width, m});
  gemm_at(width, m, rows, cache.features.ptr(), dy.ptr(), dw.ptr(), false);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      base_.grad[i * n + j] += dw[j * m + i];
      const double s = scale_.value[i * n + j];
      const double* a = coef_.value.ptr() + (i * n + j) * nb;
      double* ga = coef_.grad.ptr() + (i * n + j) * nb;
      double gs = 0.0;
      for (std::size_t k = 0; k < nb; ++k) {
        const double g = dw[(n + j * nb + k) * m + i];
        ga[k] += s * g;
        gs += a[k] * g;
      }
      scale_.grad[i * n + j] += gs;
    }
  }

  // dF = dy * W^T, folded directly into dx.
  const Tensor w = combined_weights();
  Tensor dx({rows, n});
  for (std::size_t r = 0; r < rows; ++r) {
    const double* g = dy.ptr() + r * m;
    const double* d = cache.derivatives.ptr() + r * width;
    for (std::size_t c = 0; c < width; ++c) {
      const double dc = d[c];
      if (dc == 0.0) continue;
      const double* wc = w.ptr() + c * m;
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += g[i] * wc[i];
      const std::size_t j = c < n ? c : (c - n) / nb;
      dx[r * n + j] += s * dc;
    }
  }
  return dx;
}

double EdgeFunctionBank::edge_value(std::size_t out_index, std::size_t in_index, double x) const {
  const std::size_t n = in_dim_, nb = grid_.basis_count();
  const std::vector<double> b = bspline_basis(x, grid_);
  const double* a = coef_.value.ptr() + (out_index * n + in_index) * nb;
  double spline = 0.0;
  for (std::size_t k = 0; k < nb; ++k) spline += a[k] * b[k];
  return base_.value[out_index * n + in_index] * silu(x) +
         scale_.value[out_index * n + in_index] * spline;
}

void EdgeFunctionBank::set_grid(const SplineGrid& grid) {
  grid_ = grid;
  const Shape shape{out_dim_, in_dim_, grid.basis_count()};
  if (coef_.value.shape() != shape) {
    coef_.value = Tensor(shape);
    coef_.grad = Tensor(shape);
  }
}

bool EdgeFunctionBank::update_grid(double lo_act, double hi_act, std::size_t max_grid_size) {
  if (!(hi_act > lo_act)) return false;
  if (lo_act >= grid_.t_min && hi_act <= grid_.t_max) return false;
  const double margin = 0.1 * (hi_act - lo_act);
  const double lo = lo_act - margin;
  const double hi = hi_act + margin;
  const double h = grid_.spacing();
  auto intervals = [h](double gap) {
    return gap > 0.0 ? static_cast<std::size_t>(std::ceil(gap / h - 1e-9)) : std::size_t{0};
  };
  std::size_t left = lo_act < grid_.t_min ? intervals(grid_.t_min - lo) : 0;
  std::size_t right = hi_act > grid_.t_max ? intervals(hi - grid_.t_max) : 0;
  const std::size_t budget =
      max_grid_size > grid_.grid_size ? max_grid_size - grid_.grid_size : 0;
  while (left + right > budget) {
    if (left >= right) {
      --left;
    } else {
      --right;
    }
  }
  if (left + right == 0) return false;

  SplineGrid next = grid_;
  next.t_min = grid_.t_min - static_cast<double>(left) * h;
  next.t_max = grid_.t_max + static_cast<double>(right) * h;
  next.grid_size = grid_.grid_size + left + right;

  // Least-squares transfer matrix T [K' x K]: new coefficients = T * old coefficients,
  // fitted on probes spread over every interval of the new extended knot range.
  const std::size_t nb_old = grid_.basis_count(), nb_new = next.basis_count();
  const std::size_t per_interval = 2 * (next.degree + 1);
  const std::size_t n_intervals = next.grid_size + 2 * next.degree;
  const double t0 = next.t_min - static_cast<double>(next.degree) * h;
  const std::size_t n_probe = per_interval * n_intervals;
  Tensor design({n_probe, nb_new});
  Tensor old_basis({n_probe, nb_old});
  for (std::size_t q = 0; q < n_intervals; ++q) {
    for (std::size_t s = 0; s < per_interval; ++s) {
      const double x = t0 + h * (static_cast<double>(q) +
                                 (static_cast<double>(s) + 0.5) / static_cast<double>(per_interval));
      const std::size_t row = q * per_interval + s;
      bspline_basis(x, next, design.row(row));
      bspline_basis(x, grid_, old_basis.row(row));
    }
  }
  const Tensor transfer = least_squares(design, old_basis);  // [K' x K]

  const Tensor old_coef = coef_.value;
  const std::size_t edges = out_dim_ * in_dim_;
  Tensor fresh({out_dim_, in_dim_, nb_new});
  for (std::size_t e = 0; e < edges; ++e) {
    const double* a = old_coef.ptr() + e * nb_old;
    double* out = fresh.ptr() + e * nb_new;
    for (std::size_t r = 0; r < nb_new; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < nb_old; ++c) s += transfer[r * nb_old + c] * a[c];
      out[r] = s;
    }
  }
  grid_ = next;
  coef_.value = std::move(fresh);
  coef_.grad = Tensor(coef_.value.shape());
  return true;
}

ActivationRange activation_range(const Tensor& activations) {
  ActivationRange r{std::numeric_limits<double>::infinity(),
                    -std::numeric_limits<double>::infinity()};
  for (double v : activations.data()) {
    r.min = std::min(r.min, v);
    r.max = std::max(r.max, v);
  }
  return r;
}

bool grid_update(EdgeFunctionBank& bank, const Tensor& recent_inputs, std::size_t max_grid_size) {
  if (recent_inputs.empty()) throw ParameterError("grid_update: empty activation sample");
  const ActivationRange r = activation_range(recent_inputs);
  return bank.update_grid(r.min, r.max, max_grid_size);
}

namespace {

nlohmann::json grid_json(const SplineGrid& g) {
  return {{"t_min", g.t_min}, {"t_max", g.t_max}, {"grid_size", g.grid_size},
          {"degree", g.degree}};
}

SplineGrid grid_from_json(const nlohmann::json& j) {
  SplineGrid g;
  g.t_min = j.at("t_min").get<double>();
  g.t_max = j.at("t_max").get<double>();
  g.grid_size = j.at("grid_size").get<std::size_t>();
  g.degree = j.at("degree").get<std::size_t>();
  return g;
}

struct BankCache final : LayerCache {
  Shape input_shape;
  EdgeFunctionBank::Cache bank;
};

}  // namespace

DenseKan::DenseKan(std::size_t in_dim, std::size_t out_dim, SplineGrid grid)
    : bank_(in_dim, out_dim, grid) {}

Shape DenseKan::output_shape(const Shape& input) const {
  if (input.empty() || input.back() != bank_.in_dim()) {
    throw ShapeError("densekan expects last axis " + std::to_string(bank_.in_dim()) + ", got " +
                     shape_string(input));
  }
  Shape out = input;
  out.back() = bank_.out_dim();
  return out;
}

Tensor DenseKan::forward(const Tensor& x, ForwardContext& /*ctx*/, CachePtr* cache) const {
  if (x.rank() < 2 || x.shape().back() != bank_.in_dim()) {
    throw ShapeError("densekan: bad input shape " + shape_string(x.shape()));
  }
  const std::size_t rows = x.size() / bank_.in_dim();
  Tensor flat = x.reshaped({rows, bank_.in_dim()});
  Shape out_shape = x.shape();
  out_shape.back() = bank_.out_dim();
  if (cache == nullptr) return bank_.forward(flat, nullptr).reshaped(out_shape);
  auto c = std::make_unique<BankCache>();
  c->input_shape = x.shape();
  Tensor y = bank_.forward(flat, &c->bank);
  *cache = std::move(c);
  return std::move(y).reshaped(out_shape);
}

Tensor DenseKan::backward(const LayerCache* cache, const Tensor& dy) {
  const auto& c = cache_as<BankCache>(cache, kind());
  const std::size_t rows = dy.size() / bank_.out_dim();
  Tensor dx = bank_.backward(c.bank, dy.reshaped({rows, bank_.out_dim()}));
  return std::move(dx).reshaped(c.input_shape);
}

nlohmann::json DenseKan::state() const { return {{"grid", grid_json(bank_.grid())}}; }

void DenseKan::load_state(const nlohmann::json& state) {
  if (state.contains("grid")) bank_.set_grid(grid_from_json(state.at("grid")));
}

Conv1dKan::Conv1dKan(std::size_t in_channels, std::size_t filters, std::size_t kernel_size,
                     std::size_t stride, SplineGrid grid)
    : in_channels_(in_channels),
      filters_(filters),
      kernel_size_(kernel_size),
      stride_(stride),
      bank_(kernel_size * in_channels, filters, grid) {
  if (kernel_size == 0 || stride == 0) throw ParameterError("conv1dkan: kernel and stride must be positive");
}

std::size_t Conv1dKan::output_length(std::size_t input_length) const {
  if (input_length < kernel_size_) {
    throw ShapeError("conv1dkan: input length " + std::to_string(input_length) +
                     " shorter than kernel " + std::to_string(kernel_size_));
  }
  return (input_length - kernel_size_) / stride_ + 1;
}

Shape Conv1dKan::output_shape(const Shape& input) const {
  if (input.size() != 2 || input[1] != in_channels_) {
    throw ShapeError("conv1dkan expects [L x " + std::to_string(in_channels_) + "], got " +
                     shape_string(input));
  }
  return {output_length(input[0]), filters_};
}

Tensor Conv1dKan::forward(const Tensor& x, ForwardContext& /*ctx*/, CachePtr* cache) const {
  if (x.rank() != 3 || x.dim(2) != in_channels_) {
    throw ShapeError("conv1dkan: bad input shape " + shape_string(x.shape()));
  }
  const std::size_t batch = x.dim(0), len = x.dim(1), c = in_channels_;
  const std::size_t out_len = output_length(len);
  const std::size_t window = kernel_size_ * c;
  Tensor cols({batch * out_len, window});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t t = 0; t < out_len; ++t)
      for (std::size_t k = 0; k < kernel_size_; ++k)
        for (std::size_t ch = 0; ch < c; ++ch)
          cols[(b * out_len + t) * window + k * c + ch] = x.at(b, t * stride_ + k, ch);

  if (cache == nullptr) return bank_.forward(cols, nullptr).reshaped({batch, out_len, filters_});
  auto bc = std::make_unique<BankCache>();
  bc->input_shape = x.shape();
  Tensor y = bank_.forward(cols, &bc->bank);
  *cache = std::move(bc);
  return std::move(y).reshaped({batch, out_len, filters_});
}

Tensor Conv1dKan::backward(const LayerCache* cache, const Tensor& dy) {
  const auto& c = cache_as<BankCache>(cache, kind());
  const std::size_t batch = c.input_shape[0], len = c.input_shape[1], ch_n = in_channels_;
  const std::size_t out_len = output_length(len);
  const std::size_t window = kernel_size_ * ch_n;
  Tensor dcols = bank_.backward(c.bank, dy.reshaped({batch * out_len, filters_}));
  Tensor dx(c.input_shape);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t t = 0; t < out_len; ++t)
      for (std::size_t k = 0; k < kernel_size_; ++k)
        for (std::size_t ch = 0; ch < ch_n; ++ch)
          dx.at(b, t * stride_ + k, ch) += dcols[(b * out_len + t) * window + k * ch_n + ch];
  return dx;
}

nlohmann::json Conv1dKan::state() const { return {{"grid", grid_json(bank_.grid())}}; }

void Conv1dKan::load_state(const nlohmann::json& state) {
  if (state.contains("grid")) bank_.set_grid(grid_from_json(state.at("grid")));
}

}  // namespace kacq::kan
